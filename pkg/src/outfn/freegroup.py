"""Free group words over abstract generators, and Nielsen reduction.

Words reuse the oriented-edge encoding: tuples of (generator, ±1).  The one
nontrivial algorithm here is Nielsen reduction of a generating tuple with
witness tracking, which decides whether an endomorphism of F_n given on a
basis is an automorphism and, when it is, expresses the basis in terms of
the images.  Desk scale only.
"""

from __future__ import annotations

from .graphs import Word, reduce_word, rev_word, cyclic_reduce_word


def multiply(*words: Word) -> Word:
    out: list = []
    for w in words:
        for oe in w:
            if out and out[-1][0] == oe[0] and out[-1][1] == -oe[1]:
                out.pop()
            else:
                out.append(oe)
    return tuple(out)


def inverse(w: Word) -> Word:
    return rev_word(w)


def conjugate_classes_equal(u: Word, v: Word) -> bool:
    cu, cv = cyclic_reduce_word(u), cyclic_reduce_word(v)
    if len(cu) != len(cv):
        return False
    if not cu:
        return True
    return any(cv[i:] + cv[:i] == cu for i in range(len(cv)))


def apply_endomorphism(images: dict[str, Word], w: Word) -> Word:
    out: list = []
    for (g, s) in w:
        img = images[g] if s > 0 else rev_word(images[g])
        for oe in img:
            if out and out[-1][0] == oe[0] and out[-1][1] == -oe[1]:
                out.pop()
            else:
                out.append(oe)
    return tuple(out)


def _weight(words: list[Word]) -> tuple:
    return (sum(len(w) for w in words), sorted(words))


def nielsen_reduce_with_witness(
    words: list[Word],
) -> tuple[list[Word], list[Word]]:
    """Nielsen-reduce a tuple of words, tracking witnesses.

    Returns (reduced, witness) where witness[i] is a word in formal symbols
    y1..yn expressing reduced[i] as a product of the input words.
    """
    n = len(words)
    ws = [reduce_word(w) for w in words]
    ys: list[Word] = [((f"y{i+1}", 1),) for i in range(n)]

    def try_moves() -> bool:
        cur = _weight(ws)
        # drop/shrink moves: replace w_i by w_i * w_j^e or w_j^e * w_i
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for e in (1, -1):
                    wj = ws[j] if e > 0 else rev_word(ws[j])
                    yj = ys[j] if e > 0 else rev_word(ys[j])
                    for left in (False, True):
                        cand = multiply(wj, ws[i]) if left else multiply(ws[i], wj)
                        ycand = multiply(yj, ys[i]) if left else multiply(ys[i], yj)
                        trial = list(ws)
                        trial[i] = cand
                        if _weight(trial) < cur:
                            ws[i] = cand
                            ys[i] = ycand
                            return True
        # inversion moves for lexicographic progress
        for i in range(n):
            trial = list(ws)
            trial[i] = rev_word(ws[i])
            if _weight(trial) < cur:
                ws[i] = rev_word(ws[i])
                ys[i] = rev_word(ys[i])
                return True
        return False

    while try_moves():
        pass
    return ws, ys


def invert_generating_tuple(
    generators: list[str], images: list[Word]
) -> dict[str, Word] | None:
    """Given images of a basis under an endomorphism, return the inverse
    expressions or None when the endomorphism is not an automorphism.

    The returned dict maps each generator g to a word in formal symbols
    ``y1..yn`` such that substituting images[i] for yi yields g.  For free
    groups of finite rank a surjective endomorphism is an automorphism, so
    success of the inversion certifies the automorphism property.
    """
    reduced, witness = nielsen_reduce_with_witness(list(images))
    seen: dict[tuple[str, int], Word] = {}
    for w, y in zip(reduced, witness):
        if len(w) != 1:
            return None
        seen[w[0]] = y
    out: dict[str, Word] = {}
    for g in generators:
        if (g, 1) in seen:
            out[g] = seen[(g, 1)]
        elif (g, -1) in seen:
            out[g] = rev_word(seen[(g, -1)])
        else:
            return None
    return out


def is_automorphism(generators: list[str], images: dict[str, Word]) -> bool:
    return invert_generating_tuple(generators, [images[g] for g in generators]) is not None


def express_word(
    inverse_witness: dict[str, Word], substitution: dict[str, Word], w: Word
) -> Word:
    """Rewrite w via the inverse witness, substituting actual words for the
    formal y-symbols.  ``substitution`` maps y-symbols to words."""
    step1 = apply_endomorphism(inverse_witness, w)
    return apply_endomorphism(substitution, step1)
