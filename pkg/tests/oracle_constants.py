"""Frozen reference values used across the test suite.

Every constant here was computed independently of the library (closed
forms over exact rationals, or 30-digit mpmath evaluation) and then
frozen.  Tests compare library output against these numbers; none of
them were produced by the code under test.
"""

# Crab-style model: cells (lambda10, lambda01, lambda11), effects
# {0, 2} and {1, 2}, kernel (1, 1, -1), i.e. d1*d2 = d3.
CRAB_CELLS = ("lambda10", "lambda01", "lambda11")
CRAB_SUBSETS = ((0, 2), (1, 2))
CRAB_Y = (11, 2, 36)

# Poisson MLE for y = (11, 2, 36): with s1 = y1 + y3 = 47 and
# s2 = y2 + y3 = 38, the third cell solves t^2 - (s1 + s2 + 1) t
# + s1 s2 = 0 (smaller root) and lam = (s1 - t, s2 - t, t).
CRAB_T = 35.062746066806227
CRAB_LAMBDA_HAT = (11.937253933193771, 2.9372539331937717, 35.062746066806227)

# Same closed form for y = (0, 2, 36): s1 = 36, s2 = 38.
CRAB_LAMBDA_HAT_ZERO = (4.6846584384264904, 6.6846584384264904, 31.315341561573508)

# Goodness-of-fit statistics of y = (11, 2, 36) against CRAB_LAMBDA_HAT.
CRAB_PEARSON = 0.39771217601825098
CRAB_LR = -1.4368846670718645
CRAB_BREGMAN = 0.437623199315679

# Upper chi-squared tails at 1 df (mpmath, 30 digits).
SF_CRAB_PEARSON_1 = 0.52827315585846746
SF_CRAB_BREGMAN_1 = 0.50827187229614001
SF_040_1 = 0.52708925686553809
SF_3_8415_1 = 0.049998772071222275

# Multinomial MLE for y = (11, 2, 36), N = 49: p solves
# p1 p2 = p3, 1'p = 1, and the stationarity system; gamma is the
# common ratio (A p)_j / (A y / N)_j.
CRAB_P_HAT = (0.47744793500098515, 0.35368560381700792, 0.16886646118200696)
CRAB_GAMMA = 0.67381713644609809
CRAB_ALPHA0 = -23.720026472523152
CRAB_ALPHA = 23.720026472523152

# Statistics of y against the fitted multinomial values N * p_hat.
CRAB_MULT_PEARSON = 113.02946186691607
CRAB_MULT_LR = 80.625837554168854

# chisq_sf(x, k) reference grid (mpmath regularized Gamma(k/2, x/2),
# 30 digits, rounded to double).
CHISQ_SF_GRID = {
    (1e-08, 1): 0.99992021154405264,
    (0.05, 1): 0.82306327375812149,
    (0.4, 1): 0.52708925686553809,
    (1.0, 1): 0.31731050786291409,
    (3.8415, 1): 0.049998772071222275,
    (10.0, 1): 0.0015654022580025497,
    (50.0, 1): 1.5374597944280349e-12,
    (0.5, 2): 0.77880078307140488,
    (2.0, 2): 0.36787944117144233,
    (12.0, 3): 0.0073831605053597694,
    (4.0, 5): 0.54941595135278021,
    (25.0, 10): 0.0053455054871340644,
    (90.0, 80): 0.20838182003259278,
    (210.0, 200): 0.29975465760884373,
    (500.0, 200): 1.1737017704487874e-27,
    (1000.0, 200): 1.5008794119250894e-106,
    (1000.0, 1): 1.7958327848007262e-219,
    (300.0, 4): 1.083439491947826e-63,
}

# max |B - X^2| over the 26 directions s in {-1, 0, 1}^3 \ {0}
# (normalized to unit length) with lam_r = (5r, 8r, 40 r^2) and
# t_r = lam_r + s * sqrt(lam_r).
LEMMA_MAX_GAP = {
    1: 0.19530880213179436,
    10: 0.050786309695565413,
    100: 0.01524967296208557,
}

# splitmix64 reference outputs for seed 0 (published test vector).
SPLITMIX64_SEED0 = (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F)
