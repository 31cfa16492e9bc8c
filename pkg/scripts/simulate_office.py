#!/usr/bin/env python
"""Simulate one office path, analyse it and compare against the ground truth."""

import argparse

from openplan import iso3382, synth


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--decay", type=float, default=6.0, help="spatial decay rate per distance doubling, dB")
    ap.add_argument("--noise", type=float, default=30.0, help="background level in every band, dB")
    ap.add_argument("--level-sd", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = synth.SyntheticOfficeSpec(decay_db=(args.decay,) * 7, noise=(args.noise,) * 7,
                                     level_sd_db=args.level_sd, seed=args.seed)
    run, truth = synth.generate_path(spec)
    ms = iso3382.compute_metric_set(run)
    for name, got, want in (("D2,S", ms.d2s_db, truth.d2s), ("Lp,A,S,4m", ms.lpas4m_db, truth.lpas4m),
                            ("rD", ms.rd_m, truth.rd)):
        print(f"{name:10s} computed {got!s:>22}  truth {want!s:>22}")


if __name__ == "__main__":
    main()
