"""Command-line entry point.

Subcommands: profile, index, spectrum, verify, scan, evolve. Each run
resolves its configuration (JSON config file overridden by flags), embeds
the resolved config, its SHA-256 hash, and the tolerance set into every
output file, and exits with: 0 success, 1 property violation (verify
mismatch), 2 nonexistence/degeneracy, 64 usage error, 70 internal numeric
failure. Eigenvalue lists are canonically sorted before emission so reruns
reproduce outputs bit-identically.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import (DegenerateKernelError, DegenerateOrbitError, GbstabError,
                     NearDegenerateError, NonexistenceError, UsageError)
from .hill import assemble_hill
from .index import index_from_formula, verify_index
from .pencil import (assemble_pencil, build_projector, leading_unstable_mode,
                     pencil_spectrum)
from .profile import (WaveParameters, constant_wave, equilibrium_energy,
                      sample_profile)
from . import atlas, evolve

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_NONEXISTENT = 2
EXIT_USAGE = 64
EXIT_NUMERIC = 70

TOLERANCES = {
    "residual_tol": 1e-8,
    "kernel_tol_rel": 1e-7,
    "re_tol_rel": 1e-6,
    "im_tol_rel": 1e-6,
    "sign_tol": 1e-8,
    "cluster_tol_rel": 1e-6,
    "s1_tol": 1e-10,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _emit(path, payload, cfg):
    payload = dict(payload)
    payload["config"] = cfg
    payload["config_hash"] = _config_hash(cfg)
    payload["tolerances"] = {k: cfg.get(k, v) for k, v in TOLERANCES.items()}
    payload["version"] = __version__
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    return payload


def _complex_list(lams):
    return [[float(z.real), float(z.imag)] for z in lams]


def _wave_args(sub):
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--a", type=float, default=0.0)
    sub.add_argument("--b", type=float, default=0.0)
    sub.add_argument("--E", type=float, required=True)
    sub.add_argument("--chat", type=float, required=True)
    sub.add_argument("--csign", type=int, default=1, choices=(-1, 1))
    sub.add_argument("--N", type=int, default=128)
    sub.add_argument("--u-hint", type=float, default=None)
    sub.add_argument("--L", type=float, default=None,
                     help="period override for constant (equilibrium) waves")


def _common_args(sub):
    sub.add_argument("--config", type=str, default=None,
                     help="JSON config file; flags override its entries")
    sub.add_argument("--out", type=str, default=".",
                     help="output directory")
    sub.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = _Parser(prog="gbstab", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sp = ap.add_subparsers(dest="command", required=True)

    for name in ("profile", "index", "spectrum", "verify"):
        sub = sp.add_parser(name)
        _wave_args(sub)
        _common_args(sub)

    scan = sp.add_parser("scan")
    scan.add_argument("--p", type=float, required=True)
    scan.add_argument("--chat", type=float, required=True)
    scan.add_argument("--csign", type=int, default=1, choices=(-1, 1))
    scan.add_argument("--a-min", type=float, required=True)
    scan.add_argument("--a-max", type=float, required=True)
    scan.add_argument("--E-min", type=float, required=True)
    scan.add_argument("--E-max", type=float, required=True)
    scan.add_argument("--resolution", type=int, default=64)
    scan.add_argument("--N", type=int, default=96)
    scan.add_argument("--workers", type=int, default=1)
    scan.add_argument("--svg", action="store_true")
    _common_args(scan)

    ev = sp.add_parser("evolve")
    _wave_args(ev)
    ev.add_argument("--dt", type=float, default=None)
    ev.add_argument("--tmax", type=float, default=10.0)
    ev.add_argument("--perturb", choices=("none", "random", "eigen"),
                    default="none")
    ev.add_argument("--amplitude", type=float, default=1e-7)
    ev.add_argument("--snapshots", type=int, default=0,
                    help="write this many full-field snapshots as flat binary")
    _common_args(ev)
    return ap


def _resolve_config(args):
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("config",) or val is None:
            continue
        cfg[key.replace("-", "_")] = val
    cfg.setdefault("command", args.command)
    return cfg


def _params_from_cfg(cfg):
    N = int(cfg["N"])
    if N % 2 != 0 or N < 32:
        raise UsageError(f"N must be even and >= 32, got {N}")
    params = WaveParameters(p=cfg["p"], a=cfg.get("a", 0.0), E=cfg["E"],
                            chat=cfg["chat"], b=cfg.get("b", 0.0),
                            csign=int(cfg.get("csign", 1)))
    return params, N, cfg.get("u_hint")


def _build_wave(cfg):
    params, N, hint = _params_from_cfg(cfg)
    if cfg.get("L") is not None:
        # prescribed period: only the constant equilibrium wave supports it
        Estar, _ = equilibrium_energy(params, u_hint=hint)
        if abs(params.E - Estar) > 1e-10 * max(1.0, abs(Estar)):
            raise UsageError("--L is only valid at the equilibrium energy "
                             f"E* = {Estar!r}")
        return constant_wave(params.p, params.chat, N, L=cfg["L"],
                             a=params.a, csign=params.csign, u_hint=hint)
    return sample_profile(params, N, u_hint=hint,
                          residual_tol=cfg.get("residual_tol", 1e-8))


def _wave_payload(wave):
    return {
        "params": {"p": wave.params.p, "a": wave.params.a, "b": wave.params.b,
                   "E": wave.params.E, "chat": wave.params.chat,
                   "csign": wave.params.csign, "c": wave.c},
        "N": wave.N, "L": wave.L, "Umean": wave.Umean,
        "Uminus": wave.Uminus, "Uplus": wave.Uplus,
        "residual": wave.residual, "energy_residual": wave.energy_residual,
    }


def cmd_profile(cfg):
    wave = _build_wave(cfg)
    out = cfg["out"]
    payload = dict(_wave_payload(wave), samples=[float(x) for x in wave.samples])
    _emit(os.path.join(out, "wave.json"), payload, cfg)
    with open(os.path.join(out, "wave.csv"), "w") as fh:
        fh.write("xi,U\n")
        for x, u in zip(wave.grid.xi, wave.samples):
            fh.write(f"{x!r},{u!r}\n")
    return EXIT_OK


def cmd_index(cfg):
    wave = _build_wave(cfg)
    rep = index_from_formula(wave)
    payload = {"wave": _wave_payload(wave), "index": _index_payload(rep)}
    _emit(os.path.join(cfg["out"], "index.json"), payload, cfg)
    return EXIT_OK


def _index_payload(rep):
    return {"nL2": rep.nL2, "n_s1": rep.n_s1, "s1": rep.s1, "sU1": rep.sU1,
            "sUU": rep.sUU, "Dgkdv": rep.Dgkdv, "norm_e_sq": rep.norm_e_sq,
            "scalar": rep.scalar, "n_scalar": rep.n_scalar,
            "count": rep.count, "chat_star": rep.chat_star, "nD": rep.nD,
            "gkdv_count": rep.gkdv_count, "constant": rep.constant}


def _spectrum_payload(rep):
    return {
        "eigenvalues": _complex_list(rep.eigenvalues),
        "k_r": rep.k_r, "k_c": rep.k_c, "k_i_minus": rep.k_i_minus,
        "imaginary_modes": [
            {"lam": [float(m.lam.real), float(m.lam.imag)],
             "multiplicity": m.multiplicity, "neg_count": m.neg_count,
             "krein_sign": m.krein_sign} for m in rep.imaginary_modes],
        "re_tol": rep.re_tol, "im_tol": rep.im_tol,
        "pairing_error": rep.pairing_error, "scale": rep.scale,
    }


def _full_pipeline(cfg):
    wave = _build_wave(cfg)
    hill = assemble_hill(wave, kernel_tol_rel=cfg.get("kernel_tol_rel", 1e-7))
    disc = assemble_pencil(wave, hill)
    build_projector(disc)
    rep = pencil_spectrum(disc,
                          re_tol_rel=cfg.get("re_tol_rel", 1e-6),
                          im_tol_rel=cfg.get("im_tol_rel", 1e-6),
                          sign_tol=cfg.get("sign_tol", 1e-8),
                          cluster_tol_rel=cfg.get("cluster_tol_rel", 1e-6))
    return wave, hill, disc, rep


def cmd_spectrum(cfg):
    wave, hill, disc, rep = _full_pipeline(cfg)
    payload = {"wave": _wave_payload(wave), "spectrum": _spectrum_payload(rep)}
    _emit(os.path.join(cfg["out"], "spectrum.json"), payload, cfg)
    return EXIT_OK


def cmd_verify(cfg):
    wave, hill, disc, rep = _full_pipeline(cfg)
    verdict = verify_index(wave, hill, disc, rep)
    payload = {
        "wave": _wave_payload(wave),
        "formula": _index_payload(verdict.formula),
        "spectrum": _spectrum_payload(rep),
        "direct_total": verdict.direct_total,
        "formula_count": verdict.formula.count,
        "equal": verdict.equal,
        "hill_scalar": verdict.hill_scalar,
        "pencil_scalar": verdict.pencil_scalar,
        "scalar_rel_diff": verdict.scalar_rel_diff,
    }
    _emit(os.path.join(cfg["out"], "verify.json"), payload, cfg)
    return EXIT_OK if verdict.equal else EXIT_MISMATCH


def cmd_scan(cfg):
    points = atlas.scan_plane(
        cfg["p"], (cfg["a_min"], cfg["a_max"]), (cfg["E_min"], cfg["E_max"]),
        cfg["chat"], int(cfg["resolution"]), N=int(cfg.get("N", 96)),
        csign=int(cfg.get("csign", 1)), workers=int(cfg.get("workers", 1)))
    out = cfg["out"]
    atlas.write_scan_csv(points, os.path.join(out, "scan.csv"))
    meta = {"config": cfg, "config_hash": _config_hash(cfg),
            "tolerances": TOLERANCES}
    atlas.write_scan_json(points, os.path.join(out, "scan.json"), meta)
    if cfg.get("svg"):
        atlas.write_scan_svg(points, os.path.join(out, "scan.svg"))
    return EXIT_OK


def cmd_evolve(cfg):
    wave = _build_wave(cfg)
    dt = cfg.get("dt") or min(0.01, 0.25 * 2.0 * wave.L / wave.N)
    n_steps = int(np.ceil(cfg.get("tmax", 10.0) / dt))
    state = evolve.traveling_state(wave, dt)

    mode = cfg.get("perturb", "none")
    amp = cfg.get("amplitude", 1e-7)
    if mode == "random":
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        xi = wave.grid.xi
        du = sum(rng.standard_normal() * np.cos(np.pi * k * xi / wave.L)
                 + rng.standard_normal() * np.sin(np.pi * k * xi / wave.L)
                 for k in range(1, 4))
        du = du / wave.grid.norm(du)
        state.u = state.u + amp * du
    elif mode == "eigen":
        hill = assemble_hill(wave)
        disc = assemble_pencil(wave, hill)
        lam, vec = leading_unstable_mode(disc)
        du, dv = evolve.mode_seed(wave, disc, lam, vec)
        state.u = state.u + amp * du
        state.v = state.v + amp * dv

    stepper = evolve.BoussinesqIntegrator(wave.N, wave.L, wave.params.p, dt)
    sample_every = max(1, n_steps // 200)
    snapshots = []
    snap_every = max(1, n_steps // cfg["snapshots"]) if cfg.get("snapshots") else None

    uh = np.fft.rfft(state.u)
    vh = np.fft.rfft(state.v)
    state.record(evolve.invariants(state.u, state.v, wave.L, wave.params.p))
    norms = [(0.0, evolve.orbit_distance(state.u, wave)[0])]
    raw = []
    for i in range(1, n_steps + 1):
        uh, vh = stepper.step_spectral(uh, vh)
        if i % sample_every == 0 or i == n_steps:
            u = np.fft.irfft(uh, n=wave.N)
            v = np.fft.irfft(vh, n=wave.N)
            t = i * dt
            state.u, state.v, state.t = u, v, t
            state.record(evolve.invariants(u, v, wave.L, wave.params.p))
            norms.append((t, evolve.orbit_distance(u, wave)[0]))
        if snap_every and (i % snap_every == 0):
            raw.append((i * dt, np.fft.irfft(uh, n=wave.N),
                        np.fft.irfft(vh, n=wave.N)))

    out = cfg["out"]
    payload = {
        "wave": _wave_payload(wave),
        "dt": dt, "n_steps": n_steps,
        "perturbation": {"mode": mode, "amplitude": amp},
        "times": [t for t, _ in norms],
        "perturbation_norms": [d for _, d in norms],
        "invariants_log": state.invariants_log,
        "max_invariant_drift": state.max_invariant_drift(),
    }
    if raw:
        bin_path = os.path.join(out, "snapshots.bin")
        arr = np.stack([np.concatenate([u, v]) for _, u, v in raw])
        arr.astype("<f8").tofile(bin_path)
        payload["snapshots"] = {
            "file": "snapshots.bin", "dtype": "<f8 (little-endian float64)",
            "shape": list(arr.shape), "layout": "row = [u(0..N-1), v(0..N-1)]",
            "times": [t for t, _, _ in raw], "N": wave.N, "L": wave.L,
            "dt": dt,
        }
    _emit(os.path.join(out, "trajectory.json"), payload, cfg)
    return EXIT_OK


COMMANDS = {
    "profile": cmd_profile,
    "index": cmd_index,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
}


def _error_payload(kind, exc):
    return {"error": {"kind": kind, "message": str(exc)}}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve_config(args)
        os.makedirs(cfg.get("out", "."), exist_ok=True)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(json.dumps(_error_payload("Usage", exc)))
        return EXIT_USAGE
    except NonexistenceError as exc:
        print(json.dumps(_error_payload("Nonexistence", exc)))
        return EXIT_NONEXISTENT
    except (DegenerateOrbitError, NearDegenerateError,
            DegenerateKernelError) as exc:
        print(json.dumps(_error_payload("Degenerate", exc)))
        return EXIT_NONEXISTENT
    except GbstabError as exc:
        print(json.dumps(_error_payload(f"Numerical:{type(exc).__name__}", exc)))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
