"""Indonesian text normalization: case folding, tokenization, stopword
removal and rule-based affix stripping.

The stemmer is a reduced confix-stripping variant driven by a shipped root
dictionary: a token is stemmed by peeling inflectional suffixes, then trying
prefix families (with nasal-assimilation recoding such as ``meny+vowel ->
s+vowel``), returning the first form found in the dictionary. Tokens that
never hit a dictionary root are passed through unchanged, so unknown words
are stable under the pipeline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

_TOKEN_SPLIT = re.compile(r"[^0-9a-zA-Z]+")
_VOWELS = frozenset("aeiou")

# Inflectional suffixes, applied in this order, each at most once. Particles
# come before possessives so stacked forms like "bukunyalah" unwind cleanly.
SUFFIXES = ("lah", "kah", "pun", "nya", "ku", "mu", "kan", "an", "i")

# Prefix families in application order. The second element lists consonants
# restored when the prefix swallowed one through nasal assimilation; those
# candidates apply only when the remainder starts with a vowel.
PREFIXES = (
    ("di", ()),
    ("ke", ()),
    ("se", ()),
    ("ter", ()),
    ("bel", ()),
    ("ber", ()),
    ("be", ()),
    ("meng", ("k",)),
    ("meny", ("s",)),
    ("mem", ("p", "m")),
    ("men", ("t", "n")),
    ("me", ()),
    ("peng", ("k",)),
    ("peny", ("s",)),
    ("pem", ("p", "m")),
    ("pen", ("t", "n")),
    ("per", ()),
    ("pel", ()),
    ("pe", ()),
)


@dataclass(frozen=True)
class StemmerRules:
    """Rule tables for the affix stripper.

    The dictionary gates every strip: no form is ever returned unless it is
    a known root, which also makes stemming idempotent.
    """

    root_dictionary: frozenset
    suffixes: tuple = SUFFIXES
    prefixes: tuple = PREFIXES


@dataclass(frozen=True)
class Stoplist:
    words: frozenset

    def __contains__(self, token: str) -> bool:
        return token in self.words


def _read_wordlist(name: str) -> frozenset:
    text = resources.files("hajjguard").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


@lru_cache(maxsize=None)
def default_stoplist() -> Stoplist:
    """Shipped Indonesian stopword list (one word per line)."""
    return Stoplist(_read_wordlist("stopwords.txt"))


@lru_cache(maxsize=None)
def default_rules() -> StemmerRules:
    """Stemmer rules over the shipped root dictionary."""
    return StemmerRules(root_dictionary=_read_wordlist("rootwords.txt"))


def load_stoplist(path) -> Stoplist:
    with open(path, encoding="utf-8") as fh:
        return Stoplist(frozenset(w.strip() for w in fh if w.strip()))


def load_root_dictionary(path) -> StemmerRules:
    with open(path, encoding="utf-8") as fh:
        return StemmerRules(root_dictionary=frozenset(w.strip() for w in fh if w.strip()))


def tokenize(text: str) -> list:
    """Split on any non-alphanumeric run; drop 1-char and purely numeric
    tokens. Order is preserved and no case folding happens here."""
    out = []
    for tok in _TOKEN_SPLIT.split(text):
        if len(tok) < 2 or tok.isdigit():
            continue
        out.append(tok)
    return out


def _strip_prefixes(word: str, rules: StemmerRules, depth: int):
    """Try every prefix family on ``word``; return the first dictionary hit.

    All candidates at the current level are dictionary-checked before
    recursing, so a shallow hit always beats a deeper one. Depth is bounded
    to two strips (covers forms like mem+ber+root).
    """
    if depth == 0:
        return None
    roots = rules.root_dictionary
    deferred = []
    for surface, recodes in rules.prefixes:
        if not word.startswith(surface):
            continue
        rest = word[len(surface):]
        if len(rest) < 2:
            continue
        candidates = [rest]
        if rest[0] in _VOWELS:
            candidates.extend(letter + rest for letter in recodes)
        for cand in candidates:
            if cand in roots:
                return cand
        deferred.append(candidates)
    for candidates in deferred:
        for cand in candidates:
            hit = _strip_prefixes(cand, rules, depth - 1)
            if hit is not None:
                return hit
    return None


def stem_token(token: str, rules: StemmerRules | None = None) -> str:
    """Reduce a lowercase token to its dictionary root.

    Suffixes are stripped first (in rule order, checking the dictionary after
    every strip), then prefixes are tried on each suffix-stripped form, most
    stripped first and the original form last. If nothing hits the
    dictionary the token is returned unchanged.
    """
    if rules is None:
        rules = default_rules()
    roots = rules.root_dictionary
    if token in roots:
        return token

    forms = [token]
    current = token
    for suffix in rules.suffixes:
        if current.endswith(suffix) and len(current) - len(suffix) >= 2:
            current = current[: -len(suffix)]
            if current in roots:
                return current
            forms.append(current)

    for form in reversed(forms):
        hit = _strip_prefixes(form, rules, depth=2)
        if hit is not None:
            return hit
    return token


def preprocess_text(text: str, stoplist: Stoplist | None = None,
                    rules: StemmerRules | None = None) -> list:
    """Full pipeline: case fold, tokenize, drop stopwords, stem.

    Stopword removal happens before stemming and stemmed forms are not
    re-checked against the stoplist.
    """
    if stoplist is None:
        stoplist = default_stoplist()
    if rules is None:
        rules = default_rules()
    folded = text.lower()
    return [stem_token(tok, rules) for tok in tokenize(folded) if tok not in stoplist]
