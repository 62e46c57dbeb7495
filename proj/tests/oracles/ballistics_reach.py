#!/usr/bin/env python3
"""Reference integration of the carcass drag ODE.

State s = (x, y, w): rotor-plane horizontal, height, downwind.
    s' = v
    v' = -yd * (v - wind(s)) * ||v - wind(s)|| - (0, G, 0)
with yd = G / Vt^2, wind(s) = (0, 0, w_n * (y/y_n)^a), explicit Euler at
dt = 0.01 s.  Used to freeze the drop-test time and the reach bounds.
"""
import numpy as np

G = 9.807
Y_N = 80.0
R0 = 45.0
TSR = 6.0
HELLMAN = 0.22


def integrate(s0, v0, vt, w_n, a=HELLMAN, dt=0.01):
    yd = G / vt**2
    s = np.array(s0, float)
    v = np.array(v0, float)
    t = 0.0
    for _ in range(10**6):
        y = max(s[1], 0.1)
        wind = np.array([0.0, 0.0, w_n * (y / Y_N) ** a])
        rel = v - wind
        acc = -yd * rel * np.linalg.norm(rel) - np.array([0.0, G, 0.0])
        s_new = s + v * dt
        v = v + acc * dt
        t += dt
        if s_new[1] <= 0.0:
            f = s[1] / (s[1] - s_new[1])
            s = s + f * (s_new - s)
            t = t - dt + f * dt
            return s, t
        s = s_new
    raise RuntimeError("no landing")


def strike_state(radius, azimuth, w_hub):
    x0 = radius * np.cos(azimuth)
    y0 = Y_N + radius * np.sin(azimuth)
    wind_at_hub = w_hub  # reference wind given at nacelle height
    speed = TSR * wind_at_hub * radius / R0
    vx = -np.sin(azimuth) * speed
    vy = np.cos(azimuth) * speed
    return (x0, y0, 0.0), (vx, vy, 0.0)


print("== drop test: bat Vt=8.8, fall 91.4 m, no wind ==")
s, t = integrate((0, 91.4, 0), (0, 0, 0), 8.8, 0.0)
tc = (8.8 / G) * np.arccosh(np.exp(91.4 * G / 8.8**2))
print(f"euler fall time = {t:.4f} s   closed form = {tc:.4f} s")

print("\n== bat, 12 m/s constant wind, top-of-rotor strikes (azimuth pi/2) ==")
dists = []
for radius in np.linspace(0, R0, 46):
    s0, v0 = strike_state(radius, np.pi / 2, 12.0)
    s, t = integrate(s0, v0, 8.8, 12.0)
    d = np.hypot(s[0], s[2])
    dists.append((radius, d, s[2], t))
best = max(dists, key=lambda r: r[1])
print(f"max distance = {best[1]:.2f} m at radius {best[0]:.1f} (downwind {best[2]:.2f}, t={best[3]:.2f}s)")
print(f"hub (r=0): {dists[0][1]:.2f} m;  tip (r=45): {dists[-1][1]:.2f} m")

print("\n== bat, 12 m/s, full strike grid max ==")
md = 0.0
for radius in np.linspace(0, R0, 16):
    for az in np.linspace(0, 2 * np.pi, 25)[:-1]:
        s0, v0 = strike_state(radius, az, 12.0)
        s, t = integrate(s0, v0, 8.8, 12.0)
        md = max(md, np.hypot(s[0], s[2]))
print(f"max over grid = {md:.2f} m")

print("\n== eagle, 4 m/s, full strike grid max ==")
me = 0.0
for radius in np.linspace(0, R0, 16):
    for az in np.linspace(0, 2 * np.pi, 25)[:-1]:
        s0, v0 = strike_state(radius, az, 4.0)
        s, t = integrate(s0, v0, 25.0, 4.0)
        me = max(me, np.hypot(s[0], s[2]))
print(f"max over grid = {me:.2f} m")

print("\n== step-halving check on the farthest bat case ==")
s0, v0 = strike_state(best[0], np.pi / 2, 12.0)
sa, _ = integrate(s0, v0, 8.8, 12.0, dt=0.01)
sb, _ = integrate(s0, v0, 8.8, 12.0, dt=0.005)
print(f"dt=0.01 -> ({sa[0]:.4f},{sa[2]:.4f}); dt=0.005 -> ({sb[0]:.4f},{sb[2]:.4f}); |diff|={np.hypot(*(sa-sb)[[0,2]]):.4f} m")

print("\n== monotonicity in wind speed (bat, fixed strike r=30, az=pi/4) ==")
prev = -1.0
ok = True
for w in [4, 6, 8, 10, 12, 14]:
    s0, v0 = strike_state(30.0, np.pi / 4, w)
    s, _ = integrate(s0, v0, 8.8, w)
    d = np.hypot(s[0], s[2])
    if d < prev:
        ok = False
    prev = d
    print(f"  w={w}: {d:.2f} m")
print("monotone:", ok)
