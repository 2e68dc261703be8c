#!/usr/bin/env python3
"""Convert a LINQS citation dataset (.content/.cites) to coeba's format.

Writes <out>/<name>.edges (one undirected pair per line, ids 0..N-1 in
.content order) and <out>/<name>.features (header "N D", then N rows).
Self-citations, duplicate pairs and citations of papers missing from
.content are dropped; the counts go to stderr.
"""

import argparse
import sys
from pathlib import Path


def read_content(path):
    ids, rows = {}, []
    width = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            toks = line.split()
            if not toks:
                continue
            paper, words = toks[0], toks[1:-1]
            if width is None:
                width = len(words)
            elif len(words) != width:
                sys.exit(f"{path}:{lineno}: expected {width} features, got {len(words)}")
            if paper in ids:
                sys.exit(f"{path}:{lineno}: duplicate paper id {paper}")
            ids[paper] = len(rows)
            rows.append(words)
    if not rows:
        sys.exit(f"{path}: no rows")
    return ids, rows, width


def read_cites(path, ids):
    edges = set()
    unknown = loops = 0
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            toks = line.split()
            if not toks:
                continue
            if len(toks) != 2:
                sys.exit(f"{path}:{lineno}: expected two paper ids")
            a, b = (ids.get(t) for t in toks)
            if a is None or b is None:
                unknown += 1
            elif a == b:
                loops += 1
            else:
                edges.add((min(a, b), max(a, b)))
    return sorted(edges), unknown, loops


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", type=Path, help="directory holding <name>.content and <name>.cites")
    ap.add_argument("name", help="dataset name, e.g. cora or citeseer")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    args = ap.parse_args()

    ids, rows, width = read_content(args.src / f"{args.name}.content")
    edges, unknown, loops = read_cites(args.src / f"{args.name}.cites", ids)

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / f"{args.name}.edges", "w") as f:
        f.writelines(f"{a} {b}\n" for a, b in edges)
    with open(args.out / f"{args.name}.features", "w") as f:
        f.write(f"{len(rows)} {width}\n")
        f.writelines(" ".join(r) + "\n" for r in rows)

    print(f"{args.name}: {len(rows)} nodes, {len(edges)} edges, {width} features; "
          f"dropped {unknown} citations of unknown papers, {loops} self-citations",
          file=sys.stderr)


if __name__ == "__main__":
    main()
