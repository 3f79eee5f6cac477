"""End-to-end: CSV corpus -> bundle file -> HTTP responses.

Writes a small corpus and vector files to a temp directory, builds a bundle
with the CLI, then exercises the service endpoints in-process and prints
the JSON bodies the explorer UI consumes. Finishes by printing the command
that serves the same bundle for real.

Run:  python3 demos/03_service_quickstart.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from duorec.bundle import load_bundle
from duorec.cli import main as duorec_cli
from duorec.service import create_app

CORPUS = """id,text,lang,image_url
a,Grading and bunching carrots in the field,en,https://example.org/a.jpg
b,Bunching carrots in the field,en,
c,Roadside display of pumpkins and turnips,en,
d,Le tapis rouge du festival,fr,
e,Sur le tapis rouge,fr,
f,Children at the fiesta,en,
"""

VOCAB = {
    "en": ["grading", "and", "bunching", "carrots", "in", "the", "field",
           "roadside", "display", "of", "pumpkins", "turnips", "children",
           "at", "fiesta"],
    "fr": ["le", "tapis", "rouge", "du", "festival", "sur"],
}


def write_inputs(root: Path) -> None:
    (root / "corpus.csv").write_text(CORPUS)
    rng = np.random.default_rng(7)
    for lang, words in VOCAB.items():
        lines = [f"{len(words)} 6"]
        for w in words:
            lines.append(w + " " + " ".join(f"{v:.6f}" for v in rng.normal(size=6)))
        (root / f"{lang}.vec").write_text("\n".join(lines) + "\n")


def show(title, body):
    print(f"\n== {title}")
    print(json.dumps(body, indent=2, ensure_ascii=False)[:900])


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        write_inputs(root)
        bundle = root / "bundle.jsonl"
        code = duorec_cli([
            "build", "--corpus", str(root / "corpus.csv"),
            "--embeddings", f"en={root / 'en.vec'}",
            "--embeddings", f"fr={root / 'fr.vec'}",
            "--min-df", "1", "--m", "3", "--nw", "2", "--ne", "2",
            "--cache-k", "4", "--out", str(bundle),
        ])
        assert code == 0

        client = TestClient(create_app(load_bundle(bundle)))
        show("GET /config", client.get("/config").json())
        show("GET /documents/a", client.get("/documents/a").json())
        show("GET /documents/a/neighbors?nw=2&ne=2",
             client.get("/documents/a/neighbors?nw=2&ne=2").json())
        show("GET /search?q=carrots", client.get("/search?q=carrots").json())
        show("GET /metrics?nw=2&ne=2&mode=replacement",
             client.get("/metrics?nw=2&ne=2&mode=replacement").json())

        print("\nTo serve a bundle like this one (with the explorer UI):")
        print("  duorec serve --bundle bundle.jsonl --port 8040 --ui-dir frontend/dist")


if __name__ == "__main__":
    main()
