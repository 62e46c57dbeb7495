#!/usr/bin/env python3
"""Reference values for distribution tests, computed with scipy.

Run from anywhere; prints the constants that are frozen into the C++ tests.
"""
import numpy as np
from scipy import stats, integrate, optimize

print("== gamma distribution implied by the log-x + x ring regression ==")
# beta0 = 2.0698, beta1 = -0.09449  ->  gamma(shape = beta0 + 2, rate = -beta1)
shape, rate = 2.0698 + 2.0, 0.09449
g = stats.gamma(a=shape, scale=1.0 / rate)
qs = g.ppf([0.5, 0.75, 0.90, 0.95])
print(f"shape={shape} rate={rate}")
print(f"median q75 q90 q95 = {qs[0]:.4f} {qs[1]:.4f} {qs[2]:.4f} {qs[3]:.4f}")
print(f"mode = {(shape - 1.0) / rate:.4f}")
print(f"P(<=100) = {g.cdf(100.0):.6f}")
print(f"P(<=20) = {g.cdf(20.0):.6f}  P(<=50) = {g.cdf(50.0):.6f}")
print(f"P(>150) = {g.sf(150.0):.6g}  P(>200) = {g.sf(200.0):.6g}")

print("\n== gamma(2, 0.1), i.e. x*exp(b1*x) with b1=-0.1 ==")
g2 = stats.gamma(a=2.0, scale=10.0)
print(f"CDF(80) = {g2.cdf(80.0):.10f}")

print("\n== Rayleigh from x*exp(b2*x^2), b2=-0.001 ==")
sigma = np.sqrt(-1.0 / (2.0 * -0.001))
print(f"sigma = {sigma:.6f}")
print(f"median = sigma*sqrt(2 ln 2) = {sigma * np.sqrt(2.0 * np.log(2.0)):.6f}")
print(f"mode = {sigma:.6f}")

print("\n== gamma truth used in the grid example: shape 1.774, scale 28.17 ==")
g3 = stats.gamma(a=1.774, scale=28.17)
print(f"P(<=75) = {g3.cdf(75.0):.6f}")
print(f"P(<=80) = {g3.cdf(80.0):.6f}")

print("\n== gamma truth used in the coverage check: shape 1.7744, rate 0.0355 ==")
g4 = stats.gamma(a=1.7744, scale=1.0 / 0.0355)
print(f"P(<=50) = {g4.cdf(50.0):.6f}  P(<=100) = {g4.cdf(100.0):.6f}  P(<=150) = {g4.cdf(150.0):.6f}")
print(f"P(<=20) = {g4.cdf(20.0):.6f}")

print("\n== Weibull persistence shape 0.64 scale 1.705 ==")
w = stats.weibull_min(c=0.64, scale=1.705)
print(f"median = {w.ppf(0.5):.6f}  P(T>6) = {w.sf(6.0):.6f}")

print("\n== AICc spot value: k=2, n=100, loglik=-50 ==")
k, n, ll = 2, 100, -50.0
print(f"aicc = {-2*ll + 2*k + 2*k*(k+1)/(n-k-1):.10f}")

print("\n== Weibull wind regimes by moment matching ==")
def solve_weibull(mean, sd):
    cv2 = (sd / mean) ** 2
    from scipy.special import gamma as G
    f = lambda k: G(1 + 2.0 / k) / G(1 + 1.0 / k) ** 2 - 1.0 - cv2
    k = optimize.brentq(f, 0.1, 50.0, xtol=1e-14)
    lam = mean / G(1 + 1.0 / k)
    return k, lam
for nm, m, s in [("low", 5.32, 2.78), ("high", 9.18, 2.1)]:
    k, lam = solve_weibull(m, s)
    wd = stats.weibull_min(c=k, scale=lam)
    print(f"{nm}: shape={k:.6f} scale={lam:.6f}  (check mean={wd.mean():.4f} sd={wd.std():.4f})")

print("\n== truncated-normal and Maxwell-Boltzmann normalizing checks ==")
# tnormal kernel exp(b1 x + b2 x^2) on [0, inf): b1=0.08, b2=-0.002
b1, b2 = 0.08, -0.002
val, _ = integrate.quad(lambda x: np.exp(b1 * x + b2 * x * x), 0, np.inf)
s2 = -1.0 / (2.0 * b2); mu = s2 * b1
closed = np.exp(mu * mu / (2 * s2)) * np.sqrt(2 * np.pi * s2) * stats.norm.cdf(mu / np.sqrt(s2))
print(f"tnormal integral quad={val:.10f} closed={closed:.10f}")
# MB kernel x^2 exp(b2 x^2), b2=-0.0008
b2 = -0.0008
val, _ = integrate.quad(lambda x: x * x * np.exp(b2 * x * x), 0, np.inf)
closed = 0.25 * np.sqrt(np.pi / (-b2) ** 3)
print(f"mb integral quad={val:.10f} closed={closed:.10f}")
# lognormal kernel x^(1+b0) exp(b1 log^2 x): b0=-1.2, b1=-0.35
b0l, b1l = -1.2, -0.35
val, _ = integrate.quad(lambda x: x ** (1.0 + b0l) * np.exp(b1l * np.log(x) ** 2), 0, np.inf)
s2l = -1.0 / (2.0 * b1l); mul = (b0l + 2.0) * s2l
closed = np.sqrt(2 * np.pi * s2l) * np.exp(mul ** 2 / (2 * s2l))
print(f"lognormal integral quad={val:.10f} closed={closed:.10f}")
# inverse gaussian kernel x^(-3/2) exp(bi/x + b1 x): bi=-30, b1=-0.05
bi, b1g = -30.0, -0.05
val, _ = integrate.quad(lambda x: x ** (-1.5) * np.exp(bi / x + b1g * x), 0, np.inf)
closed = np.sqrt(np.pi / -bi) * np.exp(-2.0 * np.sqrt(bi * b1g))
print(f"invgauss integral quad={val:.10g} closed={closed:.10g}")
# xepi0 (inverse gamma) kernel x^(1+b0) exp(bi/x): b0=-3.4, bi=-12
b0i, bii = -3.4, -12.0
val, _ = integrate.quad(lambda x: x ** (1.0 + b0i) * np.exp(bii / x), 0, np.inf)
from scipy.special import gamma as G
closed = G(-(b0i + 2.0)) / (-bii) ** (-(b0i + 2.0))
print(f"xepi0 integral quad={val:.10g} closed={closed:.10g}")
# chisquared kernel x^(1+b0) exp(-x/2): b0=-0.9
b0c = -0.9
val, _ = integrate.quad(lambda x: x ** (1.0 + b0c) * np.exp(-x / 2.0), 0, np.inf)
closed = 2.0 ** (b0c + 2.0) * G(b0c + 2.0)
print(f"chisq integral quad={val:.10g} closed={closed:.10g}")
