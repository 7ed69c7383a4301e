#!/usr/bin/env python3
"""Regenerate the CTM fixture corpus and its golden TextGrids.

Independent of the Rust implementation: times are kept as integer
centiseconds and the Praat long format is written directly. Run from this
directory; outputs are committed and must not be regenerated casually.
"""

LEXICON = [
    ("<oov>", "oov"),
    ("A", "AH0"),
    ("A", "EY1"),
    ("AGAIN", "AH0 G EH1 N"),
    ("BOOK", "B UH1 K"),
    ("KLATT", "K L AE1 T"),
    ("PAT", "P AE1 T"),
    ("SAY", "S EY1"),
    ("TUTT", "T AH1 T"),
]

FILES = {
    "110236_20091006_82330_F": "110236",
    "220417_20091007_10512_M": "220417",
}

# utt -> (file, start cs, words with chosen pron index, silence after word i)
UTTS = [
    ("110236_20091006_82330_F_001", "110236_20091006_82330_F", 50, ["SAY", "KLATT", "AGAIN"], {0}),
    ("110236_20091006_82330_F_002", "110236_20091006_82330_F", 460, ["SAY", "PAT", "AGAIN"], set()),
    ("110236_20091006_82330_F_003", "110236_20091006_82330_F", 900, ["A", "BOOK"], set()),
    ("220417_20091007_10512_M_001", "220417_20091007_10512_M", 30, ["SAY", "TUTT", "AGAIN"], set()),
    ("220417_20091007_10512_M_002", "220417_20091007_10512_M", 400, ["KLATT"], set()),
    ("220417_20091007_10512_M_003", "220417_20091007_10512_M", 700, ["PAT", "A", "BOOK"], {1}),
]


def prons(word):
    return [p.split() for w, p in LEXICON if w == word]


def phone_durs():
    # deterministic 4..13 centisecond durations
    n = 0
    while True:
        yield 4 + (n * 7) % 10
        n += 1


def positioned(phones):
    if len(phones) == 1:
        return [phones[0] + "_S"]
    return [phones[0] + "_B"] + [p + "_I" for p in phones[1:-1]] + [phones[-1] + "_E"]


def build_phone_table():
    bases = sorted({p for _, pr in LEXICON for p in pr.split()})
    syms = ["<eps>", "SIL"] + ["SIL" + s for s in ("_B", "_E", "_I", "_S")]
    for b in bases:
        syms += [b + s for s in ("_B", "_E", "_I", "_S")]
    return {s: i for i, s in enumerate(syms)}


def cs(v):
    return "%d.%02d" % divmod(v, 100)


def fmt(v):
    return "%.6f" % (v / 100)


def quote(s):
    return '"' + s.replace('"', '""') + '"'


def fill(spans, xmax):
    out, t = [], 0
    for a, b, lab in sorted(spans):
        assert a >= t, "overlap"
        if a > t:
            out.append((t, a, ""))
        out.append((a, b, lab))
        t = b
    if t < xmax:
        out.append((t, xmax, ""))
    return out


def textgrid(xmax, tiers):
    lines = ['File type = "ooTextFile"', 'Object class = "TextGrid"', "",
             "xmin = %s " % fmt(0), "xmax = %s " % fmt(xmax), "tiers? <exists> ",
             "size = %d " % len(tiers), "item []: "]
    for i, (name, ivs) in enumerate(tiers, 1):
        lines += ["    item [%d]:" % i, '        class = "IntervalTier" ', "        name = %s " % quote(name),
                  "        xmin = %s " % fmt(0), "        xmax = %s " % fmt(xmax),
                  "        intervals: size = %d " % len(ivs)]
        for j, (a, b, lab) in enumerate(ivs, 1):
            lines += ["        intervals [%d]:" % j, "            xmin = %s " % fmt(a),
                      "            xmax = %s " % fmt(b), "            text = %s " % quote(lab)]
    return "\n".join(lines) + "\n"


def main():
    table = build_phone_table()
    durs = phone_durs()
    ctm, segments, text, utt2spk = [], [], [], []
    phones_by_file = {f: [] for f in FILES}
    words_by_file = {f: [] for f in FILES}
    seg_end = {}
    for utt, file_id, start, words, pauses in UTTS:
        t = 0
        tokens = [("SIL", 10)]
        for i, w in enumerate(words):
            pr = prons(w)[0]
            wstart = t + sum(d for _, d in tokens) - t
            syms = positioned(pr)
            spans = [(s, next(durs)) for s in syms]
            tokens += spans
            words_by_file[file_id].append((start + wstart, start + wstart + sum(d for _, d in spans), w))
            if i in pauses:
                tokens.append(("SIL", 15))
        tokens.append(("SIL", 10))
        t = 0
        for sym, d in tokens:
            ctm.append("%s 1 %s %s %d" % (utt, cs(t), cs(d), table[sym]))
            phones_by_file[file_id].append((start + t, start + t + d, sym))
            t += d
        segments.append("%s %s %s %s" % (utt, file_id, cs(start), cs(start + t)))
        seg_end[file_id] = max(seg_end.get(file_id, 0), start + t)
        text.append("%s %s" % (utt, " ".join(words)))
        utt2spk.append("%s %s" % (utt, FILES[file_id]))

    write("a.ctm", ctm)
    write("phones.txt", ["%s %d" % (s, i) for s, i in sorted(table.items(), key=lambda kv: kv[1])])
    write("segments", sorted(segments))
    write("text", sorted(text))
    write("utt2spk", sorted(utt2spk))
    write("lexicon.txt", ["%s %s" % wp for wp in LEXICON])
    for f in FILES:
        xmax = seg_end[f]
        g = textgrid(xmax, [("phones", fill(phones_by_file[f], xmax)), ("words", fill(words_by_file[f], xmax))])
        with open("golden/%s.TextGrid" % f, "w") as fh:
            fh.write(g)


def write(name, lines):
    with open(name, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
