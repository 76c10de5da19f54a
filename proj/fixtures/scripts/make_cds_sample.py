#!/usr/bin/env python3
"""Writes fixtures/data/cds_sample.jsonl: 100 users, 613 items, 800 reviews.

The records follow the Amazon review JSONL layout. Content is synthetic;
only the shape and the counts matter to the tests.
"""

import json
import random
import sys
from pathlib import Path

USERS = 100
ITEMS = 613
PER_USER = 8
SEED = 20240607

WORDS = (
    "jazz vinyl blues soul funk piano trumpet saxophone ballad live remaster "
    "acoustic folk country bluegrass gospel choir opera symphony baroque "
    "punk metal grunge shoegaze indie synth disco house techno ambient "
    "reggae dub ska hiphop rap lofi orchestral soundtrack cello violin"
).split()


def main(out: Path) -> None:
    rng = random.Random(SEED)
    users = [f"A{n:013d}" for n in rng.sample(range(10**12, 10**13), USERS)]
    items = [f"B{n:09d}" for n in rng.sample(range(10**8, 10**9), ITEMS)]

    # Every item appears at least once; the remaining slots repeat items.
    slots = items + [rng.choice(items) for _ in range(USERS * PER_USER - ITEMS)]
    while True:
        rng.shuffle(slots)
        chunks = [slots[i * PER_USER:(i + 1) * PER_USER] for i in range(USERS)]
        if all(len(set(c)) == PER_USER for c in chunks):
            break

    titles = {i: " ".join(rng.sample(WORDS, 3)) for i in items}
    rows = []
    for u, chunk in zip(users, chunks):
        t = 1_300_000_000 + rng.randrange(0, 10**7)
        for item in chunk:
            t += rng.randrange(3600, 30 * 86400)
            rows.append({
                "reviewerID": u,
                "asin": item,
                "unixReviewTime": t,
                "summary": titles[item],
                "reviewText": "Listened to " + " and ".join(rng.sample(WORDS, 2)) + ".",
                "overall": float(rng.randint(1, 5)),
            })
    rows.sort(key=lambda r: (r["unixReviewTime"], r["reviewerID"], r["asin"]))
    with out.open("w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "data" / "cds_sample.jsonl")
