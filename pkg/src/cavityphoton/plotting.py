"""Two-panel figures: photon shape on top, drive amplitude below.

Output is byte-stable for a given input: the SVG hash salt is fixed and no
creation date is embedded.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def sign_change_times(t: np.ndarray, omega: np.ndarray) -> list[float]:
    finite = np.isfinite(omega) & (omega != 0.0)
    tt, ww = t[finite], omega[finite]
    flips = np.nonzero(np.signbit(ww[1:]) != np.signbit(ww[:-1]))[0]
    return [0.5 * (tt[i] + tt[i + 1]) for i in flips]


def drive_figure(t, psi0, omega, out_path, title: str | None = None) -> int:
    """Write the figure to ``out_path`` and return the number of phase flips drawn."""
    t = np.asarray(t, dtype=float)
    psi0 = np.asarray(psi0, dtype=float)
    omega = np.asarray(omega, dtype=float)

    with plt.rc_context({"svg.hashsalt": "cavityphoton", "svg.fonttype": "path"}):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
        top.plot(t, psi0, color="black", lw=1.2)
        top.set_ylabel(r"$\psi_0(t)$ [$\mu$s$^{-1/2}$]")
        if title:
            top.set_title(title)

        finite = np.isfinite(omega)
        bottom.plot(t[finite], np.abs(omega[finite]) / (2 * np.pi), color="tab:blue", lw=1.2)
        bottom.set_ylabel(r"$|\Omega(t)|/2\pi$ [MHz]")
        bottom.set_xlabel(r"$t$ [$\mu$s]")

        flips = sign_change_times(t, omega)
        for tf in flips:
            bottom.axvline(tf, color="tab:red", ls=":", lw=1.0)
            bottom.annotate(r"$\pi$", (tf, 0.95), xycoords=("data", "axes fraction"),
                            color="tab:red", ha="left", va="top")
        if not finite.all():
            # depletion: drive undefined beyond this point
            t_m = t[np.argmin(finite)]
            bottom.axvline(t_m, color="gray", ls="--", lw=1.0)

        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return len(flips)
