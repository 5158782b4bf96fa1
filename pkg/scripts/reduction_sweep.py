"""CR / MR / SR sweeps with the context-only perceptron, mean F1 over seeds.

    python3 scripts/reduction_sweep.py --seeds 5 --out runs/reduction_sweep
"""

import argparse
from collections import defaultdict
from pathlib import Path
from statistics import mean, pstdev

from nerprobe.experiment import DEFAULT_SWEEP, ExperimentConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n-sentences", type=int, default=2000)
    ap.add_argument("--kinds", default="CR,MR,SR")
    ap.add_argument("--ratios", default=",".join(f"{r:g}" for r in DEFAULT_SWEEP))
    ap.add_argument("--full-features", action="store_true",
                    help="use word identity features as well as context")
    ap.add_argument("--out", default="runs/reduction_sweep")
    args = ap.parse_args()
    ratios = [float(r) for r in args.ratios.split(",")]
    kinds = args.kinds.split(",")

    f1 = defaultdict(list)
    for seed in range(args.seeds):
        cfg = ExperimentConfig.from_dict({
            "input": {"synthetic": {"n_sentences": args.n_sentences, "seed": seed}},
            "transforms": [{"kind": k, "ratios": ratios} for k in kinds],
            "taggers": [{"kind": "perceptron", "word_identity": args.full_features}],
            "output_dir": f"{args.out}/seed{seed}",
            "master_seed": seed,
        })
        for cell, report in run(cfg).reports.items():
            setting = cell.split("__")[0]
            if setting != "vanilla":
                f1[setting].append(report.all.all.f1 * 100)

    lines = ["transform\tratio\tF1_mean\tF1_sd"]
    for kind in kinds:
        for r in ratios:
            vals = f1[f"{kind}-{r:g}"]
            lines.append(f"{kind}\t{r:g}\t{mean(vals):.2f}\t{pstdev(vals):.2f}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    Path(args.out, "sweep_mean.tsv").write_text(text)


if __name__ == "__main__":
    main()
