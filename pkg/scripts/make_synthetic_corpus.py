"""Write a planted-rule corpus as text tabs, one file per track."""
import argparse
from dataclasses import dataclass
from pathlib import Path

from bendlab import tabio
from bendlab.synth import PlantedConfig, planted_corpus


@dataclass
class CorpusConfig:
    out_dir: str = "corpus"
    n_tracks: int = 200
    seed: int = 2024
    fmt: str = "text"


def main(cfg: CorpusConfig) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".tab" if cfg.fmt == "text" else ".json"
    scores = planted_corpus(cfg.n_tracks, cfg.seed, PlantedConfig())
    for i, score in enumerate(scores):
        tabio.write_score(score, out / f"track{i:04d}{ext}", cfg.fmt)
    print(f"wrote {len(scores)} files to {out}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=CorpusConfig.out_dir)
    ap.add_argument("--n-tracks", type=int, default=CorpusConfig.n_tracks)
    ap.add_argument("--seed", type=int, default=CorpusConfig.seed)
    ap.add_argument("--format", dest="fmt", choices=("text", "structured"), default=CorpusConfig.fmt)
    main(CorpusConfig(**vars(ap.parse_args())))
