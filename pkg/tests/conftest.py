import textwrap

import pytest

from jointtype.corpus import parse_corpus
from jointtype.kb import load_kb

HIERARCHY = """\
# entity tree, then relation types
person\tROOT
politician\tperson
artist\tperson
location\tROOT
country\tlocation
city\tlocation
organization\tROOT
RELATION\tborn_in
RELATION\tpresident_of
RELATION\tcitizen_of
RELATION\ttravel_to
RELATION\tvisit
RELATION\tcapital_of
"""

ENTITIES = """\
e_obama\tBarack Obama\tObama|B. Obama\tperson|politician|artist
e_usa\tUnited States\tUSA|U.S.\tlocation|country
e_honolulu\tHonolulu\t\tlocation|city
e_dc\tWashington\tWashington D.C.\tlocation|city
e_un\tUnited Nations\tUN\torganization
"""

RELATIONS = """\
born_in\te_obama\te_usa
president_of\te_obama\te_usa
citizen_of\te_obama\te_usa
travel_to\te_obama\te_usa
visit\te_obama\te_usa
born_in\te_obama\te_honolulu
capital_of\te_dc\te_usa
"""

SENTENCES = [
    "Honolulu/NNP native/JJ Barack/NNP Obama/NNP was/VBD elected/VBN President/NNP of/IN the/DT "
    "United/NNP States/NNP on/IN March/NNP 20/CD in/IN 2008/CD ./.",
    "Barack/NNP Obama/NNP visited/VBD Washington/NNP yesterday/NN ./.",
    "The/DT United/NNP Nations/NNP met/VBD in/IN Washington/NNP ./.",
]


def corpus_text(sentences=SENTENCES, doc="d1"):
    lines = [f"-DOCSTART- {doc}"]
    for s in sentences:
        for tok in s.split():
            w, p = tok.rsplit("/", 1)
            lines.append(f"{w}\t{p}")
        lines.append("")
    return "\n".join(lines) + "\n"


@pytest.fixture
def kb_files(tmp_path):
    paths = []
    for name, text in (("entities.tsv", ENTITIES), ("relations.tsv", RELATIONS),
                       ("hierarchy.tsv", HIERARCHY)):
        p = tmp_path / name
        p.write_text(textwrap.dedent(text), encoding="utf-8")
        paths.append(p)
    return paths


@pytest.fixture
def toy_kb(kb_files):
    return load_kb(*kb_files)


@pytest.fixture
def toy_corpus():
    return parse_corpus(corpus_text().splitlines(keepends=True))


@pytest.fixture(scope="session")
def small_synth():
    from jointtype.synthetic import generate_synthetic
    return generate_synthetic(n_sentences=1500, seed=0)


@pytest.fixture(scope="session")
def small_run(small_synth):
    """Full pipeline on the small synthetic set, shared by several modules."""
    from jointtype.config import RunConfig
    from jointtype.evaluation import GoldAnnotation
    from jointtype.pipeline import run_pipeline
    gold = GoldAnnotation.from_sentences(small_synth.gold)
    return run_pipeline(small_synth.train, small_synth.test, small_synth.kb, RunConfig(seed=0), gold)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
