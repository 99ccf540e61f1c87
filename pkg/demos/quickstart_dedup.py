"""End-to-end walkthrough: synthesize a labeled corpus, dedup it, inspect results.

Run with: python3 demos/quickstart_dedup.py
"""

import tempfile
from pathlib import Path

from mididedup.cluster import read_clusters
from mididedup.evaluate import read_report
from mididedup.pipeline import FILTER_FILE, REPORT_FILE, CLUSTERS_FILE, PipelineConfig, stage_dedup
from mididedup.synth import synth_benchmark


def main() -> None:
    work = Path(tempfile.mkdtemp(prefix="dedup_demo_"))
    corpus = work / "corpus"
    out = work / "out"

    print(f"workspace: {work}")
    entries = synth_benchmark(corpus, n_bases=12, n_variants=2, seed=7)
    print(f"synthesized {len(entries)} pieces ({sum(1 for e in entries if e.applied)} variants)")

    # small corpus: 8 prefilter neighbors cover every 3-file group
    config = PipelineConfig(prefilter_k=8)
    report, stats = stage_dedup(corpus, out, config)

    print()
    print(f"threshold: {report.threshold_used} (precision floor reached: {report.threshold_reached})")
    print(f"precision {report.precision:.3f}  recall {report.recall:.3f}  f1 {report.f1:.3f}")
    print(f"clusters: {stats['clusters']}  files filtered: {stats['filtered']}")

    clusters = read_clusters(out / CLUSTERS_FILE)
    print()
    print("first three clusters (representative marked with *):")
    for cluster in clusters[:3]:
        names = [("*" + m if m == cluster.representative else m) for m in cluster.members]
        print("  " + ", ".join(names))

    print()
    print(f"full report: {out / REPORT_FILE}")
    print(f"drop list:   {out / FILTER_FILE}")
    # re-running stage_dedup on the same inputs reproduces every byte


if __name__ == "__main__":
    main()
