"""Rule-based conversion of annotator text into the driver's first person.

"the driver" becomes "I" (or "me" after a preposition), "the driver's"
becomes "my", and he/she/they with their object and possessive forms are
taken as coreferent with the driver once the driver has been mentioned in
the same text. The verb following a converted subject is re-agreed for "I".
Pronouns without that antecedent and subjects followed by something other
than a verb are left alone and reported for review.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN = re.compile(r"[A-Za-z']+|[^A-Za-z']+")

PREPOSITIONS = frozenset({
    "about", "around", "at", "behind", "beside", "by", "for", "from", "near",
    "of", "past", "than", "to", "toward", "towards", "with",
})
MODALS = frozenset({"will", "would", "can", "could", "should", "must", "may", "might", "shall"})
IRREGULAR = {"is": "am", "are": "am", "was": "was", "were": "was", "has": "have", "does": "do", "goes": "go"}
ADVERBS = frozenset({"then", "also", "still", "now", "just", "already", "again", "first"})
SUBJECT_PRONOUNS = frozenset({"he", "she", "they"})
OBJECT_PRONOUNS = frozenset({"him", "them"})
POSSESSIVE_PRONOUNS = frozenset({"his", "their"})
REFLEXIVE_PRONOUNS = frozenset({"himself", "herself", "themselves", "themself"})
THIRD_PERSON = SUBJECT_PRONOUNS | OBJECT_PRONOUNS | POSSESSIVE_PRONOUNS | REFLEXIVE_PRONOUNS | {"her"}


@dataclass(frozen=True)
class Conversion:
    text: str
    needs_review: bool


def _agree(verb: str) -> str | None:
    """First-person form of the verb after a converted subject; None when it is not a verb form we know."""
    lower = verb.lower()
    if lower in IRREGULAR:
        return IRREGULAR[lower]
    if lower in MODALS or lower.endswith("ed"):
        return lower
    if len(lower) > 3 and lower.endswith("ies"):
        return lower[:-3] + "y"
    if lower.endswith(("ches", "shes", "sses", "xes", "zes", "oes")):
        return lower[:-2]
    if len(lower) > 2 and lower.endswith("s") and not lower.endswith("ss"):
        return lower[:-1]
    return None


def _match_case(original: str, replacement: str) -> str:
    if replacement == "I" or not original[:1].isupper():
        return replacement
    return replacement[:1].upper() + replacement[1:]


def convert(text: str) -> Conversion:
    tokens = _TOKEN.findall(text)
    out: list[str] = []
    review = False
    antecedent = False
    agree_next = False
    previous_word = ""
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token[0].isalpha() and token[0] != "'":
            if agree_next and token.strip():
                agree_next = False
                review = True
            out.append(token)
            i += 1
            continue

        lower = token.lower()
        follower = tokens[i + 2].lower() if i + 2 < len(tokens) and tokens[i + 1] == " " else ""
        replacement = None
        consumed = 1
        subject = False

        if lower == "the" and follower in ("driver", "driver's"):
            consumed = 3
            antecedent = True
            if follower == "driver's":
                replacement = "my"
            elif previous_word in PREPOSITIONS:
                replacement = "me"
            else:
                replacement, subject = "I", True
        elif lower in THIRD_PERSON and not antecedent:
            review = True
        elif lower in SUBJECT_PRONOUNS:
            replacement, subject = "I", True
        elif lower in OBJECT_PRONOUNS:
            replacement = "me"
        elif lower in POSSESSIVE_PRONOUNS:
            replacement = "my"
        elif lower in REFLEXIVE_PRONOUNS:
            replacement = "myself"
        elif lower == "her":
            replacement = "my" if follower and follower not in PREPOSITIONS else "me"
        elif agree_next and lower not in ADVERBS and not lower.endswith("ly"):
            agreed = _agree(token)
            agree_next = False
            if agreed is None:
                review = True
            elif agreed != lower:
                replacement = agreed

        if replacement is None:
            out.append(token)
        else:
            out.append(_match_case(token, replacement))
            if subject:
                agree_next = True
        previous_word = (replacement or lower).lower()
        i += consumed

    return Conversion("".join(out), review or agree_next)


def to_first_person(text: str) -> str:
    return convert(text).text


def needs_review(text: str) -> bool:
    return convert(text).needs_review
