#!/usr/bin/env python3
"""Generate the bundled synthetic corpus (data/toy_corpus.csv).

Tweet-like short texts with a class-correlated vocabulary. Every document
carries at least one class keyword; a small share of documents carries one
keyword from each class, and a small share has its label flipped, so the
task is separable up to a few percent of noise.

Usage: make_toy_corpus.py [--n 2000] [--seed 2021] [--out data/toy_corpus.csv]
"""

import argparse
import csv
import random

# Keyword lists are mirrored in tests/acceptance (keyword-count baseline).
HATE_WORDS = [
    "hate", "hating", "hated", "disgusting", "vile", "scum", "trash",
    "filthy", "worthless", "despise", "despised", "pathetic", "parasite",
    "parasites", "vermin", "rats", "subhuman", "sickening", "deport",
    "exterminate", "inferior", "savage", "savages", "plague",
]
NONHATE_WORDS = [
    "love", "loving", "loved", "great", "beautiful", "friend", "friends",
    "happy", "enjoy", "enjoyed", "thanks", "welcome", "amazing", "support",
    "congrats", "wonderful", "celebrate", "celebrating", "proud", "awesome",
    "grateful", "cheers", "delicious", "fantastic",
]
TARGETS = ["zorbians", "klemptons", "outsiders", "newcomers", "neighbors"]
SHARED = [
    "game", "weather", "city", "music", "today", "people", "news", "school",
    "work", "team", "food", "weekend", "movie", "election", "street",
    "online", "video", "coffee", "phone", "morning", "train", "park",
    "market", "party", "match", "season", "show", "town", "story", "class",
    "watching", "playing", "talking", "walked", "posted", "reading",
    "damn", "stupid", "crazy", "idiot", "lol", "really", "still", "tonight",
]
STOP = ["the", "a", "and", "is", "are", "they", "we", "this", "that", "of",
        "to", "in", "for", "with", "all", "so", "just", "my", "our", "not"]
MENTIONS = ["@user", "@news24", "@jdoe", "@team_red", "@mayor", "@fanpage"]
HASHTAGS = ["#monday", "#news", "#truth", "#gameday", "#local", "#wow"]
URLS = ["http://t.co/x1", "https://example.com/a", "www.site.org/p?id=3",
        "https://t.co/AbC9"]
PUNCT = ["", "", "", "!", "!!", ".", "?", ","]


def make_doc(rng, hate):
    own = HATE_WORDS if hate else NONHATE_WORDS
    other = NONHATE_WORDS if hate else HATE_WORDS
    words = [rng.choice(own) for _ in range(rng.choice([1, 1, 2, 2, 3]))]
    if rng.random() < 0.01:
        words = [rng.choice(own), rng.choice(other)]
    if hate and rng.random() < 0.6:
        words.append(rng.choice(TARGETS))
    elif not hate and rng.random() < 0.2:
        words.append(rng.choice(TARGETS))
    words += [rng.choice(SHARED) for _ in range(rng.randint(2, 6))]
    words += [rng.choice(STOP) for _ in range(rng.randint(1, 4))]
    rng.shuffle(words)
    words = [w + rng.choice(PUNCT) for w in words]
    if rng.random() < 0.3:
        words[0] = words[0].capitalize()
    if rng.random() < 0.4:
        words.insert(0, rng.choice(MENTIONS))
    if rng.random() < 0.3:
        words.append(rng.choice(HASHTAGS))
    if rng.random() < 0.2:
        words.append(rng.choice(URLS))
    if rng.random() < 0.2:
        words.insert(rng.randint(0, len(words)), str(rng.randint(1, 2025)))
    return " ".join(words)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2021)
    ap.add_argument("--out", default="data/toy_corpus.csv")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = set()
    rows = []
    while len(rows) < args.n:
        hate = rng.random() < 0.45
        text = make_doc(rng, hate)
        if text in seen:
            continue
        seen.add(text)
        label = hate
        if rng.random() < 0.005:
            label = not label
        rows.append((f"t{len(rows):04d}", text, "hate" if label else "nonhate"))

    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "text", "label"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
