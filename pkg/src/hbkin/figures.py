"""Matplotlib rendering for the batch reports.

Every CLI report path saves PNG figures next to the delimited output; the
data files remain the primary artifact and plotting never mutates them.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def save_trajectory_figure(traj, path):
    t = np.asarray(traj.times)
    e = np.asarray(traj.energy)
    spin_drift = [float(np.sqrt(np.sum(np.abs(s - traj.spin_total[0]) ** 2)))
                  for s in traj.spin_total]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    axes[0].semilogy(t, np.abs(e - e[0]) + 1e-18, "o-", ms=3)
    axes[0].set_xlabel("t")
    axes[0].set_ylabel(r"$|e(t)-e(0)|$")
    axes[0].set_title("energy drift")
    axes[1].semilogy(t, np.asarray(spin_drift) + 1e-18, "o-", ms=3, color="tab:green")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel(r"$\|s(t)-s(0)\|$")
    axes[1].set_title("total-spin drift")
    axes[2].semilogy(t, np.asarray(traj.fermi_residual) + 1e-18, "o-", ms=3, label="fermi")
    axes[2].semilogy(t, np.asarray(traj.herm_residual) + 1e-18, "s-", ms=3, label="herm")
    axes[2].set_xlabel("t")
    axes[2].set_title("constraint residuals")
    axes[2].legend(frameon=False)
    fig.suptitle(f"trajectory ({traj.status})", y=1.04)
    return _save(fig, path)


def save_epsilon_figure(report, path):
    incs = report.metadata.get("increments", [])
    if not incs:
        return None
    labels = [p for p, _ in incs]
    vals = [v for _, v in incs]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy(range(len(vals)), vals, "o-")
    ax.set_xticks(range(len(vals)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel(r"$\|\Delta\|_2$ between consecutive regulators")
    ax.set_title(f"regulator refinement ({report.verdict})")
    if "cross_mode_diff" in report.metadata:
        ax.axhline(report.metadata["cross_mode_diff"], ls="--", color="tab:red",
                   label="sharp vs lorentzian")
        ax.legend(frameon=False)
    return _save(fig, path)


def save_sigma_coll_figure(alphas, curves, path, integrals=None):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for label, vals in curves:
        ax.plot(alphas, vals, lw=1.0, label=label)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("collision mass")
    title = "collision-measure mass map"
    if integrals:
        title += "  (integrals: " + ", ".join(f"{v:.5f}" for v in integrals) + ")"
    ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def save_decay_figure(fit, bound_exponent, path, title="propagator decay"):
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.loglog(fit.abscissae, fit.values, "o", ms=3, label="measured")
    ref = fit.fitted_constant * fit.abscissae ** (-fit.fitted_exponent)
    ax.loglog(fit.abscissae, ref, "-", label=f"fit slope {fit.fitted_exponent:.3f}")
    if bound_exponent is not None:
        anchor = fit.values[0] * (fit.abscissae / fit.abscissae[0]) ** (-bound_exponent)
        ax.loglog(fit.abscissae, anchor, "--", label=f"reference slope {bound_exponent:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\sum_x |p_t(x)|^3$")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def save_integrability_figure(report, path):
    incs = report.metadata.get("increments", [])
    boxes = report.metadata.get("boxes", [])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.semilogy(boxes[: len(incs)], incs, "o-")
    ax.set_xlabel("box half-width S")
    ax.set_ylabel("shell increment")
    ax.set_title(f"phase-kernel mass increments ({report.verdict})")
    return _save(fig, path)
