"""Reference values frozen from independent computations.

Each value was produced by plain scipy quadrature or a closed form that shares
no code with the package (truncated-normal moments, normal partial moments,
gamma and digamma functions, brute-force 2-D quadrature).
"""

import math

# closed forms
INV_SQRT_2PI = 0.3989422804014327
C2 = 0.7978845608028653  # sqrt(2/pi)
C3 = 0.6266570686577501  # sqrt(pi)/(2 sqrt 2)
QUANTILE_X003 = 2.5349900619197325  # 1 + c_3 sqrt(6)
TWO_MINUS_PI_4 = 2.0 - math.pi / 4.0

# flat prior on [0, inf), N(theta, 1), one observation
KATZ_AT_0 = 0.7978845608028651
KATZ_AT_MINUS_3 = 0.28309865493043657
KATZ_RISK = {
    0.0: 1.0,
    0.25: 0.8098283017055116,
    0.5: 0.6842698015531443,
    1.0: 0.5852841411582156,
    2.0: 0.7142573945501061,
    4.0: 0.9780259551758018,
}

# clamp to [-1, 1] under N(mu, 1), squared error
CLAMP_RISK = {-1.0: 0.4602684628181615, 0.0: 0.5160585509617133, 1.0: 0.4602684628181615}

# discrete-prior Bayes risks, N(theta, 1), squared error
TWO_POINT_BAYES = 0.4495995092066729
LFP_HALFLINE = {
    1: 0.2924900405245355,
    2: 0.5753738854035925,
    4: 0.7804708476923184,
    8: 0.8885467367597708,
    16: 0.9438413789874818,
}

# exponential scale, one observation, loss (d/sigma - 1)^2
EXP_SCALE_PRIOR_124 = 0.1800289439229455
EXP_SCALE_LFP_N2 = 0.14430170262600217

# flat prior on {mu1 <= mu2}, N2(mu, I), at x = (0, 0)
HARTIGAN_AT_ORIGIN = (-0.5641895835477564, 0.5641895835477564)
# its risk is 1 plus the one-dimensional flat-prior risk at the distance to the boundary
HARTIGAN_RISK = {(-3.0, 3.0): 1.986039521948574, (-5.0, 5.0): 1.9999925515058103}

# Stein loss risks
STEIN_S_OVER_M_P1_M5 = 0.2131340912289118
STEIN_A0_P2_M5 = 0.6658184934843452
STEIN_S_OVER_M_P2_M5 = 0.7066404880046

# quantile rule xbar + eta c_m S when X_i are iid N(mu, sigma^2), m = 3, eta = 1
QUANTILE_RISK_IID_M3 = 0.5479351699358852
