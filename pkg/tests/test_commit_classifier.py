import numpy as np
import pytest

from tcpci.commit_classifier import (
    CommitClassifier,
    TfidfVectorizer,
    cross_validate,
    is_defect_fix_keyword,
    preprocess_message,
    train_classifier,
)
from tcpci.errors import DegenerateCorpusError
from tcpci.stemming import stem


def separable_corpus(n=500, seed=42):
    rng = np.random.default_rng(seed)
    fix_words = ["fix", "bug", "defect", "resolve", "crash", "npe"]
    other_words = ["add", "feature", "refactor", "docs", "update", "cleanup"]
    noise = ["module", "service", "api", "handler"]
    msgs, labels = [], []
    for i in range(n):
        is_fix = i % 2 == 0
        pool = fix_words if is_fix else other_words
        words = rng.choice(pool, size=4).tolist() + rng.choice(noise, size=2).tolist()
        msgs.append(" ".join(words))
        labels.append(is_fix)
    return msgs, labels


def test_preprocess_example():
    assert preprocess_message("Fixed NPE, see https://x.y/z") == ["fix", "npe", "<url>"]


def test_preprocess_idempotent_on_own_output():
    tokens = preprocess_message("Fixing the parser BUG with URLs http://a.b/c!!")
    assert preprocess_message(" ".join(t for t in tokens if t != "<url>")) == [
        t for t in tokens if t != "<url>"
    ]


def test_stemmer_known_forms():
    for word, expected in [
        ("fixed", "fix"),
        ("fixes", "fix"),
        ("bugs", "bug"),
        ("patched", "patch"),
        ("repairing", "repair"),
        ("running", "run"),
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("relational", "relat"),
    ]:
        assert stem(word) == expected


def test_keyword_fallback():
    assert is_defect_fix_keyword("Bugfix for issue 12")
    assert is_defect_fix_keyword("fix crash in parser")
    assert is_defect_fix_keyword("Patched the flaky timeout")
    assert not is_defect_fix_keyword("Add feature flags")
    assert not is_defect_fix_keyword("refactor tests")


def test_tfidf_duplicate_documents_identical():
    docs = [["a", "b"], ["a", "b"], ["c"]]
    v = TfidfVectorizer.fit(docs)
    X = v.transform(docs)
    assert (X[0] == X[1]).all()


def test_classifier_separable_cv_accuracy():
    msgs, labels = separable_corpus()
    acc = cross_validate(msgs, labels, k=5, seed=0)
    assert acc >= 0.95


def test_classifier_learns_training_labels():
    msgs, labels = separable_corpus(n=120, seed=1)
    clf = train_classifier(msgs, labels)
    assert clf.classify("fix crash in parser")
    preds = [clf.classify(m) for m in msgs[:40]]
    assert np.mean([p == l for p, l in zip(preds, labels[:40])]) >= 0.95


def test_empty_message_is_non_defect():
    msgs, labels = separable_corpus(n=60, seed=2)
    clf = train_classifier(msgs, labels)
    assert not clf.classify("")
    assert not clf.classify("the of and")  # all stop words


def test_single_class_corpus_rejected():
    with pytest.raises(DegenerateCorpusError):
        train_classifier(["fix a", "fix b"], [True, True])
    with pytest.raises(DegenerateCorpusError):
        cross_validate(["fix a", "fix b"], [True, True])


def test_model_json_round_trip():
    msgs, labels = separable_corpus(n=80, seed=3)
    clf = train_classifier(msgs, labels)
    again = CommitClassifier.from_json(clf.to_json())
    p1 = clf.predict_proba(msgs[:10])
    p2 = again.predict_proba(msgs[:10])
    assert np.allclose(p1, p2)
