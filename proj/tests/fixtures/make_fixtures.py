#!/usr/bin/env python3
"""Regenerates the synthetic corpora under tests/fixtures.

Usage: python3 make_fixtures.py  (writes next to this script)
"""

import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

SENTENCES = [
    "The council met on Tuesday to discuss the new budget.",
    "Rain is expected across the northern valleys this weekend.",
    "A local bakery won the regional prize for its rye bread.",
    "Engineers finished the bridge repairs two weeks early.",
    "Students argued that homework should be optional on Fridays.",
    "Libraries remain the quietest place to think in a café-filled city.",
    "Learning a second language changes how you hear your first.",
    "Every garden teaches patience before it teaches anything else.",
]

REWRITES = [
    ("the", "a"), ("on", "during"), ("new", "revised"), ("is", "seems"),
    ("won", "took"), ("finished", "completed"), ("should", "could"),
    ("remain", "are still"),
]


def dump(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def tokens(rng, machine, count):
    out = []
    for _ in range(count):
        mu = -rng.uniform(1.0, 3.0)
        var = rng.uniform(0.5, 2.0)
        shift = 0.3 if machine else -0.3
        ll = min(0.0, mu + shift * math.sqrt(var) + rng.gauss(0.0, 0.3))
        xent = rng.uniform(1.0, 3.0)
        rank = max(1, int(rng.expovariate(0.5 if machine else 0.1)) + 1)
        out.append({"ll": round(ll, 6), "mu": round(mu, 6), "var": round(var, 6),
                    "xent": round(xent, 6), "rank": rank})
    return out


def unit(rng, center, spread):
    v = [c + rng.gauss(0.0, spread) for c in center]
    norm = math.sqrt(sum(x * x for x in v))
    return [round(x / norm, 6) for x in v]


def rewrite(text, k):
    a, b = REWRITES[k % len(REWRITES)]
    words = text.split(" ")
    words = [b if w.lower() == a else w for w in words]
    return " ".join(words)


def clean_corpus():
    rng = random.Random(7)
    docs, stats, embs, pairs, candidates = [], [], [], [], []
    style_human = [1.0, 0.2, 0.1]
    style_machine = [0.1, 1.0, 0.3]
    for d, dataset in enumerate(["essays", "news"]):
        for i in range(4):
            doc_id = f"{dataset}-h{i}"
            text = SENTENCES[(i + 4 * d) % len(SENTENCES)]
            docs.append({"doc_id": doc_id, "label": "human",
                         "author_id": f"author{(i + 2 * d) % 6}",
                         "dataset_id": dataset, "method_id": "human",
                         "text": text, "char_count": len(text)})
        for i in range(4):
            src = f"{dataset}-m{i}"
            text = SENTENCES[(i + 1 + 4 * d) % len(SENTENCES)]
            docs.append({"doc_id": src, "label": "machine", "author_id": "mistral",
                         "dataset_id": dataset, "method_id": "mistral",
                         "text": text, "char_count": len(text)})
            para = rewrite(text, i + d)
            pid = f"{dataset}-p{i}"
            docs.append({"doc_id": pid, "label": "machine", "author_id": "mistral",
                         "dataset_id": dataset, "method_id": "prompting",
                         "text": para, "char_count": len(para)})
            pairs.append({"original_doc_id": src, "modified_doc_id": pid})
        for i in range(3):
            doc_id = f"{dataset}-x{i}"
            docs.append({"doc_id": doc_id, "label": "machine", "author_id": "mistral",
                         "dataset_id": dataset, "method_id": "exemplar",
                         "char_count": 120})
    for doc in docs:
        machine = doc["label"] == "machine"
        if doc["method_id"] != "exemplar":
            stats.append({"doc_id": doc["doc_id"], "stats_id": "gpt2",
                          "tokens": tokens(rng, machine, rng.randint(5, 9))})
        embs.append({"doc_id": doc["doc_id"], "encoder_id": "style", "dim": 3,
                     "vector": unit(rng, style_machine if machine else style_human, 0.6)})
        if doc["method_id"] in ("mistral", "prompting"):
            k = int(doc["doc_id"][-1])
            embs.append({"doc_id": doc["doc_id"], "encoder_id": "sbert", "dim": 3,
                         "vector": unit(rng, [1.0, 0.1 * k, 0.5], 0.05)})
    for g, dataset in enumerate(["essays", "news"]):
        for i in range(4):
            for c in ("m", "p"):
                candidates.append({"group_id": f"g{g}{i}", "doc_id": f"{dataset}-{c}{i}"})
    base = os.path.join(HERE, "clean")
    os.makedirs(base, exist_ok=True)
    dump(os.path.join(base, "documents.jsonl"), docs)
    dump(os.path.join(base, "stats.jsonl"), stats)
    dump(os.path.join(base, "embeddings.jsonl"), embs)
    dump(os.path.join(base, "pairs.jsonl"), pairs)
    dump(os.path.join(base, "candidates.jsonl"), candidates)

    bad = os.path.join(HERE, "bad_line")
    os.makedirs(bad, exist_ok=True)
    broken = [dict(d) for d in docs[:5]]
    broken[2]["label"] = "robot"
    dump(os.path.join(bad, "documents.jsonl"), broken)

    empty = os.path.join(HERE, "empty")
    os.makedirs(empty, exist_ok=True)
    for name in ("documents.jsonl", "stats.jsonl", "embeddings.jsonl"):
        open(os.path.join(empty, name), "w").close()


def gaussian_corpus():
    # Binoculars with one token (ll=-10, xent=10+s) scores exactly s up to
    # rounding; the external "Weak" detector has a smaller mean shift.
    rng = random.Random(11)
    docs, stats, external = [], [], []
    for dataset in ("wiki",):
        for label, mu_strong, mu_weak, count in (("machine", 0.5, 0.1, 300),
                                                  ("human", 0.0, 0.0, 300)):
            for i in range(count):
                doc_id = f"{label[0]}{i:04d}"
                docs.append({"doc_id": doc_id, "label": label, "author_id": f"a{i % 50}",
                             "dataset_id": dataset,
                             "method_id": "llm" if label == "machine" else "human",
                             "char_count": 500})
                s = rng.gauss(mu_strong, 1.0)
                stats.append({"doc_id": doc_id, "stats_id": "obs",
                              "tokens": [{"ll": -10.0, "mu": -1.0, "var": 1.0,
                                          "xent": round(10.0 + s, 9), "rank": 1}]})
                external.append({"doc_id": doc_id, "detector_name": "Weak",
                                 "value": round(rng.gauss(mu_weak, 1.0), 9),
                                 "orientation": "higher_machine"})
    base = os.path.join(HERE, "gaussian")
    os.makedirs(base, exist_ok=True)
    dump(os.path.join(base, "documents.jsonl"), docs)
    dump(os.path.join(base, "stats.jsonl"), stats)
    dump(os.path.join(base, "external_scores.jsonl"), external)


if __name__ == "__main__":
    clean_corpus()
    gaussian_corpus()
