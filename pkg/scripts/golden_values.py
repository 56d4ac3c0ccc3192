"""Independent high-precision oracles for the frozen test fixtures.

Evaluates the single-diode equations with mpmath at 50 digits and locates the
MPP by a dense scan over the diode-node voltage x = V + I*Rs, where the terminal
current is explicit, so no implicit solve is involved.
"""

import mpmath as mp

mp.mp.dps = 50
Q, K = mp.mpf("1.6e-19"), mp.mpf("1.3805e-23")
NS, ISC, VOC, RS, RSH = 54, mp.mpf("8.21"), mp.mpf("32.9"), mp.mpf("0.221"), mp.mpf("415.405")
KI, N, EG, TN = mp.mpf("0.0032"), mp.mpf("1.3"), mp.mpf("1.1"), mp.mpf("298.15")


def i_rs(t):
    return ISC / (mp.exp(Q * VOC / (N * NS * K * t)) - 1)


def i_0(t):
    return i_rs(t) * (t / TN) ** 3 * mp.exp(Q * EG * (1 / TN - 1 / t) / (N * K))


def curve_point(t, g, x):
    a = N * K * NS * t / Q
    iph = (ISC + KI * (t - TN)) * g / 1000
    i = iph - i_0(t) * (mp.exp(x / a) - 1) - x / RSH
    return x - i * RS, i


def dense_mpp(t, g, n=100_000):
    a = N * K * NS * t / Q
    iph = (ISC + KI * (t - TN)) * g / 1000
    x_oc = mp.findroot(lambda x: iph - i_0(t) * (mp.exp(x / a) - 1) - x / RSH, 30)
    best = (0, 0, 0)
    for k in range(n + 1):
        v, i = curve_point(t, g, x_oc * k / n)
        if v * i > best[2]:
            best = (v, i, v * i)
    return best


if __name__ == "__main__":
    print("I_RS(298.15) =", mp.nstr(i_rs(TN), 17))
    print("I_0(323.15)  =", mp.nstr(i_0(mp.mpf("323.15")), 17))
    print("I_PH(318.15) =", mp.nstr((ISC + KI * 20), 17))
    for g in (1000, 500):
        v, i, p = dense_mpp(TN, g, 20_000)
        print(f"MPP(25C, {g}) =", mp.nstr(v, 12), mp.nstr(i, 12), mp.nstr(p, 12))
