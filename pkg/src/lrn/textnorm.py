"""Text normalization shared by rule matching, featurization, and word clouds.

The pipeline is deliberately small and bit-stable: Unicode compatibility
fold, lowercase, hyphen and punctuation to spaces, whitespace collapse, and
a fixed suffix stemmer. The stemmer handles plural (-s/-es), gerund (-ing),
and past (-ed) forms with consonant undoubling and final-e restoration:

    gloves -> glove     gloving -> glove    running -> run
    boxes  -> box       studies -> study    falling -> fall

It is intentionally not a full stemming library so that matching behaves
identically everywhere the package runs.
"""

from __future__ import annotations

import unicodedata

_VOWELS = frozenset("aeiou")

# Fixed stop-word list used by word-cloud term counting.
STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because
been before being below between both but by can did do does doing down
during each few for from further had has have having he her here hers
herself him himself his how i if in into is it its itself just me more
most my myself no nor not now of off on once only or other our ours
ourselves out over own same she should so some such than that the their
theirs them themselves then there these they this those through to too
under until up very was we were what when where which while who whom why
will with you your yours yourself yourselves
""".split())


def _has_vowel(s: str) -> bool:
    return any(ch in _VOWELS for ch in s)


def _ends_cvc(s: str) -> bool:
    # consonant-vowel-consonant tail, last consonant not w/x/y ("glov")
    if len(s) < 3:
        return False
    a, b, c = s[-3], s[-2], s[-1]
    return a not in _VOWELS and b in _VOWELS and c not in _VOWELS and c not in "wxy"


def _repair(stem: str) -> str:
    # undouble: "runn" -> "run"; keep -ll/-ss/-zz ("fall", "miss")
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    # restore a dropped final e: "glov" -> "glove"
    if _ends_cvc(stem):
        return stem + "e"
    return stem


def stem_token(token: str) -> str:
    """Strip -ing/-ed/-ies/-es/-s with undoubling and e-restoration."""
    t = token
    if len(t) > 4 and t.endswith("ing") and _has_vowel(t[:-3]):
        return _repair(t[:-3])
    if len(t) > 3 and t.endswith("ed") and _has_vowel(t[:-2]):
        return _repair(t[:-2])
    if len(t) > 4 and t.endswith("ies"):
        return t[:-3] + "y"
    if len(t) > 3 and t.endswith("es") and (t[-3] in "sxz" or t[-4:-2] in ("ch", "sh")):
        return t[:-2]
    if len(t) > 3 and t.endswith("s") and not t.endswith(("ss", "us", "is")):
        return t[:-1]
    return t


def fold(text: str) -> str:
    """Unicode compatibility fold + lowercase, accents stripped."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch)).lower()


def tokenize(text: str, stem: bool = True) -> list[str]:
    """Normalized token list: folded, punctuation/hyphens as separators."""
    folded = fold(text)
    cleaned = "".join(ch if ch.isalnum() else " " for ch in folded)
    tokens = cleaned.split()
    if stem:
        return [stem_token(t) for t in tokens]
    return tokens


def normalize_phrase(text: str, stem: bool = True) -> str:
    """Canonical single-spaced form of a phrase."""
    return " ".join(tokenize(text, stem=stem))


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """(normalized token, start, end) with offsets into the original text.

    Used for UI highlighting; the canonical match pipeline is tokenize().
    """
    spans = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isalnum():
            j = i
            while j < n and text[j].isalnum():
                j += 1
            token = "".join(ch for ch in fold(text[i:j]) if ch.isalnum())
            if token:
                spans.append((stem_token(token), i, j))
            i = j
        else:
            i += 1
    return spans


def contains_phrase(phrase_tokens: list[str], doc_tokens: list[str]) -> bool:
    """True iff phrase_tokens occurs as a contiguous run in doc_tokens."""
    n, m = len(doc_tokens), len(phrase_tokens)
    if m == 0 or m > n:
        return False
    first = phrase_tokens[0]
    for i in range(n - m + 1):
        if doc_tokens[i] == first and doc_tokens[i : i + m] == phrase_tokens:
            return True
    return False
