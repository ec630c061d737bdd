#!/usr/bin/env python3
"""Regenerates core/data/corpus.txt, the text used by the wordfreq workload.

The corpus is Zipf-distributed over a vocabulary of common English words and
syllable-built rare words, which gives the long-tail distinct-token growth of
natural text. Output is deterministic for a given seed.
"""
import argparse
import random

COMMON = """the of and to in a is that for it as was with be by on not he i this
are or his from at which but have an they you were her she there been one all
we their has would when if so no will more other can what out up some time
could into them only new these two may first then do any like my now over such
our man me even most made after also did many before must through back where
much your way well down should because each just those people how too little
state good very make world still own see men work long get here between both
life being under never day same another know while last might us great old
year off come since against go came right used take three small house
however around world place part found again home away water number every left
head country far hand high help line city live name open page point read story
seem table turn book word sound light night near tree start late keep change
play spell air animal mother father answer study learn food earth eye close
example paper group often run important until children side feet car mile walk
white sea began grow took river four carry state once hear stop without second
later miss idea enough eat face watch indian really almost let above girl
sometimes mountain cut young talk soon list song being leave family body music
color stand sun question fish area mark dog horse birds problem complete room
knew since ever piece told usually didn friends easy heard order red door sure
become top ship across today during short better best however low hours black
products happened whole measure remember early waves reached listen wind rock
space covered fast several hold himself toward five step morning passed vowel
true hundred against pattern numeral table north slowly money map farm pulled
draw voice seen cold cried plan notice south sing war ground fall king town
unit figure certain field travel wood fire upon""".split()

ONSETS = ["b", "br", "c", "ch", "d", "dr", "f", "fl", "g", "gr", "h", "j", "k",
          "l", "m", "n", "p", "pl", "r", "s", "sh", "st", "t", "th", "tr", "v",
          "w", "z"]
NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "io", "ou"]
CODAS = ["", "n", "r", "s", "t", "nd", "st", "ck", "ll", "m"]


def rare_words(rng, count):
    seen = set(COMMON)
    out = []
    while len(out) < count:
        syllables = rng.randint(2, 4)
        w = "".join(rng.choice(ONSETS) + rng.choice(NUCLEI) + rng.choice(CODAS)
                    for _ in range(syllables))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tokens", type=int, default=50000)
    ap.add_argument("--seed", type=int, default=20251014)
    ap.add_argument("-o", "--output", default="core/data/corpus.txt")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    vocab = list(dict.fromkeys(COMMON)) + rare_words(rng, 7000)
    weights = [1.0 / (rank + 1) ** 1.07 for rank in range(len(vocab))]

    words = rng.choices(vocab, weights=weights, k=args.tokens)
    lines, line, sentence_left = [], [], rng.randint(6, 18)
    for w in words:
        line.append(w)
        sentence_left -= 1
        if sentence_left == 0:
            line[-1] += "."
            sentence_left = rng.randint(6, 18)
        if sum(len(x) + 1 for x in line) > 72:
            lines.append(" ".join(line))
            line = []
    if line:
        lines.append(" ".join(line))
    with open(args.output, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
