#!/usr/bin/env python3
"""Generate the static QA-SRL fixture files under crates/lsoie/tests/fixtures."""
import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "lsoie", "tests", "fixtures")

ANNOTATORS = ["turk-fix-0", "turk-fix-1", "turk-fix-2"]


def question(qstring, wh, aux, subj, verb, obj, prep, obj2, tense, span,
             perfect=False, progressive=False, negated=False, passive=False,
             sources=None, judgments=None):
    if judgments is None:
        judgments = [
            {"sourceId": a, "isValid": True, "spans": [list(span)]} for a in ANNOTATORS
        ]
    return qstring, {
        "questionString": qstring,
        "questionSources": sources or ["turk-fix-0"],
        "answerJudgments": judgments,
        "questionSlots": {
            "wh": wh, "aux": aux, "subj": subj, "verb": verb,
            "obj": obj, "prep": prep, "obj2": obj2,
        },
        "tense": tense,
        "isPerfect": perfect,
        "isProgressive": progressive,
        "isNegated": negated,
        "isPassive": passive,
    }


def sentence(sid, tokens, verb_index, stem, questions):
    forms = {
        "stem": stem,
        "presentSingular3rd": stem + "s",
        "presentParticiple": stem + "ing",
        "past": stem + "ed",
        "pastParticiple": stem + "ed",
    }
    return {
        "sentenceId": sid,
        "sentenceTokens": tokens,
        "verbEntries": {
            str(verb_index): {
                "verbIndex": verb_index,
                "verbInflectedForms": forms,
                "questionLabels": dict(questions),
            }
        },
    }


def write(name, records):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    print("wrote", path)


os.makedirs(OUT, exist_ok=True)

# --- provide.jsonl (single worked example) -------------------------------------------------------------
sample = sentence(
    "fixture:wikipedia:provide:0",
    ["physicians", "provide", "drugs", "in", "Asian", "countries", "."],
    1, "provide",
    [
        question("Who provides something?", "who", "_", "_", "presentSingular3rd",
                 "something", "_", "_", "present", (0, 1)),
        question("What is being provided?", "what", "is", "_", "being pastParticiple",
                 "_", "_", "_", "present", (2, 3), progressive=True, passive=True),
        question("Where does someone provide something?", "where", "does", "someone",
                 "stem", "something", "_", "_", "present", (3, 6)),
    ],
)
write("provide.jsonl", [sample])

# --- golden.jsonl ------------------------------------------------------------
records = []

records.append(sentence(
    "Wiki1k:wikipedia:gold:0",
    ["Bats", "are", "the", "only", "mammals", "that", "can", "truly", "fly", "."],
    8, "fly",
    [
        question("What can fly?", "what", "can", "_", "stem", "_", "_", "_",
                 "present", (0, 1)),
    ],
))

records.append(sentence(
    "Wiki1k:wikipedia:gold:1",
    ["Greece", "moved", "up", "three", "to", "be", "ranked", "tenth", "."],
    6, "rank",
    [
        question("What was ranked?", "what", "was", "_", "pastParticiple", "_", "_",
                 "_", "past", (0, 1), passive=True),
        question("What was something ranked?", "what", "was", "something",
                 "pastParticiple", "_", "_", "_", "past", (7, 8), passive=True),
    ],
))

records.append(sentence(
    "Wiki1k:wikipedia:gold:2",
    ["A", "popular", "student", ",", "in", "1915", "Mao", "was", "elected",
     "secretary", "of", "the", "Students", "Society", "."],
    8, "elect",
    [
        question("Who was elected something?", "who", "was", "_", "pastParticiple",
                 "something", "_", "_", "past", (6, 7), passive=True),
        question("What was someone elected?", "what", "was", "someone",
                 "pastParticiple", "_", "_", "_", "past", (9, 14), passive=True),
        question("When was someone elected something?", "when", "was", "someone",
                 "pastParticiple", "something", "_", "_", "past", (4, 6), passive=True),
    ],
))

# Companions teaching the who < what < when order for the passive forms above.
records.append(sentence(
    "Wiki1k:wikipedia:gold:2a",
    ["Lincoln", "was", "elected", "president", "in", "1860", "."],
    2, "elect",
    [
        question("Who was elected something?", "who", "was", "_", "pastParticiple",
                 "something", "_", "_", "past", (0, 1), passive=True),
        question("What was someone elected?", "what", "was", "someone",
                 "pastParticiple", "_", "_", "_", "past", (3, 4), passive=True),
        question("When was someone elected something?", "when", "was", "someone",
                 "pastParticiple", "something", "_", "_", "past", (4, 6), passive=True),
    ],
))
records.append(sentence(
    "Wiki1k:wikipedia:gold:2b",
    ["Chen", "was", "named", "captain", "in", "2019", "."],
    2, "name",
    [
        question("Who was named something?", "who", "was", "_", "pastParticiple",
                 "something", "_", "_", "past", (0, 1), passive=True),
        question("What was someone named?", "what", "was", "someone",
                 "pastParticiple", "_", "_", "_", "past", (3, 4), passive=True),
        question("When was someone named something?", "when", "was", "someone",
                 "pastParticiple", "something", "_", "_", "past", (4, 6), passive=True),
    ],
))

records.append(sentence(
    "Wiki1k:wikipedia:gold:3",
    ["The", "proposed", "amendment", "already", "passed", "both", "houses",
     "in", "2011", "."],
    4, "pass",
    [
        question("What passed something?", "what", "_", "_", "past", "something",
                 "_", "_", "past", (0, 3)),
        question("What did something pass?", "what", "did", "something", "stem",
                 "_", "_", "_", "past", (5, 7)),
        question("When did something pass something?", "when", "did", "something",
                 "stem", "something", "_", "_", "past", (7, 9)),
    ],
))

records.append(sentence(
    "Wiki1k:wikipedia:gold:4",
    ["In", "polygynous", "species", ",", "males", "try", "to", "monopolize",
     "and", "mate", "with", "multiple", "females", "."],
    7, "monopolize",
    [
        question("Who monopolizes something?", "who", "_", "_", "presentSingular3rd",
                 "something", "_", "_", "present", (4, 5)),
        question("What does someone monopolize?", "what", "does", "someone", "stem",
                 "_", "_", "_", "present", (11, 13)),
    ],
))

records.append(sentence(
    "Wiki1k:wikipedia:gold:5",
    ["Animals", "adapted", "to", "live", "in", "the", "desert", "are", "called",
     "xerocoles", "."],
    1, "adapt",
    [
        question("What adapted?", "what", "_", "_", "past", "_", "_", "_",
                 "past", (0, 1)),
        question("What did something adapt to do?", "what", "did", "something",
                 "stem", "_", "to", "do", "past", (2, 7)),
    ],
))

write("golden.jsonl", records)

# --- domains.jsonl -----------------------------------------------------------
domains = [
    sentence(
        "Wiki1k:wikipedia:dom:0",
        ["farmers", "sell", "corn", "."],
        1, "sell",
        [
            question("Who sells something?", "who", "_", "_", "presentSingular3rd",
                     "something", "_", "_", "present", (0, 1)),
            question("What does someone sell?", "what", "does", "someone", "stem",
                     "_", "_", "_", "present", (2, 3)),
        ],
    ),
    sentence(
        "TQA:fixture:dom:1",
        ["enzymes", "digest", "proteins", "."],
        1, "digest",
        [
            question("Who digests something?", "who", "_", "_", "presentSingular3rd",
                     "something", "_", "_", "present", (0, 1)),
            question("What does someone digest?", "what", "does", "someone", "stem",
                     "_", "_", "_", "present", (2, 3)),
        ],
    ),
    sentence(
        "plain:dom:2",
        ["cats", "chase", "mice", "."],
        1, "chase",
        [
            # One model-generated question to exercise the crowd filter.
            question("Who chases something?", "who", "_", "_", "presentSingular3rd",
                     "something", "_", "_", "present", (0, 1)),
            question("What does someone chase?", "what", "does", "someone", "stem",
                     "_", "_", "_", "present", (2, 3),
                     sources=["model-ft-1"]),
        ],
    ),
]
write("domains.jsonl", domains)

# --- provide.conllu ---------------------------------------------------------------
conllu = """# sent_id = fixture:wikipedia:provide:0
1\tphysicians\t_\t_\t_\t_\t2\tnsubj\t_\t_
2\tprovide\t_\t_\t_\t_\t0\troot\t_\t_
3\tdrugs\t_\t_\t_\t_\t2\tobj\t_\t_
4\tin\t_\t_\t_\t_\t6\tcase\t_\t_
5\tAsian\t_\t_\t_\t_\t6\tamod\t_\t_
6\tcountries\t_\t_\t_\t_\t2\tobl\t_\t_
7\t.\t_\t_\t_\t_\t2\tpunct\t_\t_

"""
with open(os.path.join(OUT, "provide.conllu"), "w") as f:
    f.write(conllu)
print("wrote provide.conllu")
