"""Friedrichs Donoghue matrix of -u'' on (0, pi) at z = 2i, by closed-form solutions and mpmath quadrature.

u1(z, x) = sin(kx)/sin(k pi), u2(z, x) = sin(k(pi - x))/sin(k pi), k = sqrt(z).
v1, v2: Gram-Schmidt of u1(i), u2(i) with positive real normalizations.
(A - z)^{-1} v(i) = (v(i) - w)/(i - z), with w the solution at z sharing the boundary values of v(i).
M_jk = z delta_jk + (z^2 + 1) (v_j, (A - z)^{-1} v_k).

Run: python3 free_interval_oracle.py > free_interval_2i.json
"""

import json

import mpmath as mp

mp.mp.dps = 40


def u(z, j, x):
    k = mp.sqrt(z)
    s = mp.sin(k * mp.pi)
    return mp.sin(k * x) / s if j == 0 else mp.sin(k * (mp.pi - x)) / s


def ip(f, g):
    return mp.quad(lambda x: mp.conj(f(x)) * g(x), [0, mp.pi / 2, mp.pi])


def main():
    i = mp.mpc(0, 1)
    z = mp.mpc(0, 2)
    u1 = lambda x: u(i, 0, x)
    u2 = lambda x: u(i, 1, x)
    n1 = mp.sqrt(mp.re(ip(u1, u1)))
    v1 = lambda x: u1(x) / n1
    mu = ip(v1, u2)
    r = lambda x: u2(x) - mu * v1(x)
    n2 = mp.sqrt(mp.re(ip(r, r)))
    v = [v1, lambda x: r(x) / n2]

    def resolvent(vk):
        a, b = vk(0), vk(mp.pi)
        w = lambda x: a * u(z, 1, x) + b * u(z, 0, x)
        return lambda x: (vk(x) - w(x)) / (i - z)

    m = [[None, None], [None, None]]
    for j in range(2):
        for k in range(2):
            val = (z * z + 1) * ip(v[j], resolvent(v[k])) + (z if j == k else 0)
            m[j][k] = [float(mp.re(val)), float(mp.im(val))]
    print(json.dumps({"z": [0.0, 2.0], "m": m}, indent=2))


if __name__ == "__main__":
    main()
