"""Quick end-to-end check of the Python bindings.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml
"""

import json
import math

import fairod


def main():
    data = fairod.make_synth1(400, 80, 24, seed=3)
    assert data.n_rows == 480 and data.dim == 2
    assert sum(data.labels) == 24

    base = fairod.train_base(data, seed=3, epochs=150, base_seeds=2)
    fair = fairod.train_fair(data, base, seed=3, epochs=150, alpha=0.5, gamma=0.1)
    assert fair.variant == "fairod"

    scores = fair.score(data.features)
    assert len(scores) == data.n_rows
    assert all(math.isfinite(s) for s in scores)
    assert scores == fair.training_scores

    # scoring never reads the protected attribute
    flipped = data.with_pv([1 - g for g in data.pv])
    assert fair.score(flipped.features) == scores

    report = fairod.evaluate(
        scores, data.pv, labels=data.labels, base_scores=base.score(data.features)
    )
    assert 0.0 <= report["fairness"] <= 1.0
    assert "supervised" in report

    value, grad = fairod.loss_sp(scores, data.pv)
    assert 0.0 <= value <= 1.0 and len(grad) == data.n_rows

    restored = fairod.Model.from_json(fair.to_json())
    assert restored.score(data.features) == scores

    claims = fairod.verify_claims(8)
    assert all(not c["counterexamples"] for c in claims)

    try:
        fairod.make_synth1(0, 0, 0, seed=1)
    except fairod.FairodError:
        pass
    else:
        raise AssertionError("empty dataset accepted")

    print(json.dumps({"fairness": report["fairness"], "group_fidelity": report["group_fidelity"]}))
    print("smoke test passed")


if __name__ == "__main__":
    main()
