#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under data/.

The output is fully determined by SEED, so rerunning the script reproduces
the committed files byte for byte.

    python3 tools/make_fixtures.py [--out data]
"""

import argparse
import pathlib
import random

SEED = 13

SUBJECTS = {
    "dog": "it", "cat": "it", "boy": "he", "girl": "she", "man": "he",
    "woman": "she", "child": "she", "teacher": "he", "farmer": "he", "player": "she",
}

# verb -> objects it takes
VERBS = {
    "catches": ["ball", "frisbee", "fish"],
    "throws": ["ball", "frisbee", "stone"],
    "climbs": ["wall", "tree", "hill"],
    "reads": ["book", "letter", "map"],
    "plays": ["guitar", "piano", "game"],
    "paints": ["wall", "picture", "fence"],
    "eats": ["apple", "bread", "cake"],
    "carries": ["bag", "box", "basket"],
    "rides": ["bike", "horse", "bus"],
    "kicks": ["ball", "stone", "can"],
}

PLACES = [
    "in the park", "on the beach", "at school", "near the river",
    "in the garden", "on the street", "at home", "in the field",
]

TIMES = ["after lunch", "every morning", "in the rain", "before dinner", "with a friend", "at night"]

FEELINGS = ["is happy", "feels tired", "smiles", "laughs", "is proud", "wants more"]


def clause(rng, subject, verb=None, obj=None):
    verb = verb or rng.choice(sorted(VERBS))
    obj = obj or rng.choice(VERBS[verb])
    return verb, obj


def sentence(rng, subject, verb=None, obj=None, lead=None):
    verb, obj = clause(rng, subject, verb, obj)
    lead = lead or f"the {subject}"
    form = rng.randrange(5)
    if form == 0:
        return f"{lead} {verb} the {obj} {rng.choice(PLACES)} ."
    if form == 1:
        return f"{lead} {verb} a {obj} {rng.choice(TIMES)} ."
    if form == 2:
        return f"{lead} {verb} the {obj} and {rng.choice(FEELINGS)} ."
    if form == 3:
        other = rng.choice(sorted(SUBJECTS))
        v2, o2 = clause(rng, other)
        return f"{lead} {verb} the {obj} while the {other} {v2} the {o2} ."
    return f"{rng.choice(TIMES)} {lead} {verb} the {obj} {rng.choice(PLACES)} ."


def story(rng):
    subject = rng.choice(sorted(SUBJECTS))
    pronoun = SUBJECTS[subject]
    lines = [sentence(rng, subject)]
    for _ in range(4):
        lines.append(sentence(rng, subject, lead=pronoun if rng.random() < 0.6 else None))
    return lines


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)

    # 40 five-sentence stories; their 200 sentences double as the sentence corpus
    stories = [story(rng) for _ in range(40)]
    (out / "stories.txt").write_text("".join(" ".join(s) + "\n" for s in stories))
    (out / "sentences.txt").write_text("".join(line + "\n" for s in stories for line in s))

    # concept sets with two held-out references each
    concept_rows = []
    seen = set()
    while len(concept_rows) < 40:
        subject = rng.choice(sorted(SUBJECTS))
        verb = rng.choice(sorted(VERBS))
        obj = rng.choice(VERBS[verb])
        if (subject, verb, obj) in seen:
            continue
        seen.add((subject, verb, obj))
        pieces = [subject, verb, obj]
        rng.shuffle(pieces)
        refs = [sentence(rng, subject, verb, obj) for _ in range(2)]
        concept_rows.append("\t".join([" ".join(pieces), ""] + refs))
    (out / "concepts.tsv").write_text(
        "# pieces<TAB>prompt<TAB>references...\n" + "".join(r + "\n" for r in concept_rows))

    # story openings: the first sentence conditions the model, its content words are the pieces
    story_rows = []
    for _ in range(30):
        subject = rng.choice(sorted(SUBJECTS))
        verb = rng.choice(sorted(VERBS))
        obj = rng.choice(VERBS[verb])
        opening = f"the {subject} {verb} the {obj} ."
        continuation = " ".join(sentence(rng, subject, lead=SUBJECTS[subject]) for _ in range(4))
        story_rows.append("\t".join([f"{subject} {verb} {obj}", opening, continuation]))
    (out / "story_prompts.tsv").write_text(
        "# pieces<TAB>prompt<TAB>references...\n" + "".join(r + "\n" for r in story_rows))


if __name__ == "__main__":
    main()
