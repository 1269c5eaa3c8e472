"""Reflection spectra versus drive strength with the upper standing mode on the exciton."""

import argparse

import numpy as np

from wgmcqed.model import GHZ, SystemParams, power_for_photon_number
from wgmcqed.spectra import bare_reference, power_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-fock", type=int, default=6)
    ap.add_argument("--n-cav", type=float, nargs="+",
                    default=[0.001, 0.01, 0.03, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0])
    ap.add_argument("--step", type=float, default=0.1, help="laser step in GHz")
    ap.add_argument("--delta-ca", type=float, default=None, help="cavity-exciton detuning in GHz (default gamma_beta)")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="saturation_series.csv")
    args = ap.parse_args()

    p = SystemParams.nominal()
    dca = p.gamma_beta if args.delta_ca is None else args.delta_ca * GHZ
    grid = np.arange(-7, 5, args.step) * GHZ
    powers = [power_for_photon_number(p, n) for n in args.n_cav]
    res = power_sweep(p, powers, grid, dca, n_fock=args.n_fock, threads=args.threads)
    bare = bare_reference(p, grid)

    rows = []
    print(f"{'n_cav':>7} {'split GHz':>10} {'peak R':>8} {'trunc':>9}")
    for n, line in zip(args.n_cav, res.lines):
        s = line.splitting_ghz()
        rows.append([n, line.p_dropped, np.nan if s is None else s, line.peak_delta_R, line.max_truncation])
        flag = " !" if line.truncation_flag else ""
        print(f"{n:7.3f} {rows[-1][2]:10.3f} {line.peak_delta_R:8.4f} {line.max_truncation:9.1e}{flag}")
    print(f"bare cavity: splitting {bare.splitting / GHZ:.3f} GHz, peak R {bare.peak_delta_R:.4f}")
    np.savetxt(args.out, np.array(rows), delimiter=",",
               header="n_cav,p_dropped_w,splitting_ghz,peak_R,max_truncation", comments="")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
