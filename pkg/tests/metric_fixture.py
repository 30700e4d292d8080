"""Six gold mentions with hand-computed scores.

    m1 gold {person, politician}  pred {person, politician}   exact
    m2 gold {person, politician}  pred {person}               the 2/3 case
    m3 gold {location, city}      pred {location, country}
    m4 gold {organization}        no prediction
    m5 gold {location, country}   pred {location, country}   exact
    m6 gold {person, artist}      predicted one token too wide (spurious + missed)

strict: 2 exact of 5 predicted and 6 gold, P=2/5 R=1/3, F1=4/11
macro:  P=(1+1+1/2+1+0)/5=7/10, R=(1+1/2+1/2+0+1+0)/6=1/2, F1=7/12
micro:  TP=6 FP=3 FN=5, P=2/3 R=6/11, F1=3/5

relations: 4 typed gold pairs plus one None pair; 3 of the 4 typed
pairs are right (accuracy 3/4). Predictions add a label on the None pair
and one pair with no gold, so P=3/6, R=3/4, F1=3/5.
"""

from fractions import Fraction as F

D = ("doc", 0)

GOLD_ENTITIES = {
    (*D, 0, 2): ("person", "politician"),
    (*D, 3, 4): ("person", "politician"),
    (*D, 5, 6): ("location", "city"),
    (*D, 7, 8): ("organization",),
    (*D, 9, 10): ("location", "country"),
    (*D, 11, 13): ("person", "artist"),
}
PRED_ENTITIES = {
    (*D, 0, 2): ("person", "politician"),
    (*D, 3, 4): ("person",),
    (*D, 5, 6): ("location", "country"),
    (*D, 7, 8): (),
    (*D, 9, 10): ("location", "country"),
    (*D, 11, 14): ("person", "artist"),
}
EXPECTED_ENTITY = {
    "strict": F(4, 11), "macro": F(7, 12), "micro": F(3, 5),
    "strict_p": F(2, 5), "strict_r": F(1, 3),
    "macro_p": F(7, 10), "macro_r": F(1, 2),
    "micro_p": F(2, 3), "micro_r": F(6, 11),
}

GOLD_RELATIONS = {
    (*D, 0, 2, 9, 10): "president_of",
    (*D, 3, 4, 5, 6): "born_in",
    (*D, 5, 6, 9, 10): "capital_of",
    (*D, 0, 2, 5, 6): "born_in",
    (*D, 7, 8, 9, 10): None,
}
PRED_RELATIONS = {
    (*D, 0, 2, 9, 10): "president_of",
    (*D, 3, 4, 5, 6): "born_in",
    (*D, 5, 6, 9, 10): "capital_of",
    (*D, 0, 2, 5, 6): "president_of",
    (*D, 7, 8, 9, 10): "born_in",
    (*D, 3, 4, 9, 10): "born_in",
}
EXPECTED_RELATION = {"accuracy": F(3, 4), "precision": F(1, 2), "recall": F(3, 4), "f1": F(3, 5)}

SINGLE_GOLD = {(*D, 0, 2): ("person", "politician")}
SINGLE_PRED = {(*D, 0, 2): ("person",)}


def check(got: float, want: F) -> bool:
    # exact up to the last bit of a double
    return abs(got - float(want)) <= 2 ** -50 * max(1.0, abs(float(want)))
