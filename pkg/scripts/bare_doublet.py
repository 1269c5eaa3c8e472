"""Empty-cavity transmission doublet: solve, fit, and compare with the input rates."""

import argparse

import numpy as np

from wgmcqed.model import GHZ, DriveSpec, SystemParams, power_for_photon_number
from wgmcqed.spectra import fit_doublet, ghz_to_pm, scan_laser


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-fock", type=int, default=3)
    ap.add_argument("--step", type=float, default=0.05, help="laser step in GHz")
    ap.add_argument("--out", default="bare_doublet.csv")
    args = ap.parse_args()

    p = SystemParams.nominal().replace(g_tw=0.0)
    grid = np.arange(-6, 6 + 1e-9, args.step) * GHZ
    drive = DriveSpec(power_for_photon_number(p, 1e-3))
    res = scan_laser(p, drive, grid, n_fock=args.n_fock)
    fit = fit_doublet(grid, res.T[0])

    np.savetxt(args.out, np.column_stack([grid / GHZ, res.T[0], res.R[0]]),
               delimiter=",", header="delta_cl_ghz,T,R", comments="")
    print(f"linewidth {fit.linewidth / GHZ:.4f} GHz ({ghz_to_pm(fit.linewidth / GHZ, p.lambda0):.2f} pm), "
          f"input 2*kappa_T = {2 * p.kappa_T / GHZ:.4f} GHz")
    print(f"splitting {fit.splitting / GHZ:.4f} GHz ({ghz_to_pm(fit.splitting / GHZ, p.lambda0):.2f} pm), "
          f"input 2*gamma_beta = {2 * p.gamma_beta / GHZ:.4f} GHz")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
