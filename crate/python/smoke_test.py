"""End-to-end check of the Python bindings on a tiny synthetic corpus."""

import tempfile
from pathlib import Path

import latent_elites_py as le


def main():
    smb = le.GameConfig.stock("SMB")
    assert smb.vocab_size == len(smb.tile_chars)
    assert le.GameConfig.from_json(smb.to_json()).name == "SMB"

    corpus = le.Corpus.synth("SMB", count=1, length=48, seed=1)
    assert len(corpus) > 0
    seg = corpus.segment(0)
    text = seg.to_text(smb)
    assert le.Segment.from_text(text, smb) == seg
    assert len(seg.tiles) == 256

    print("density", le.density(seg, smb), "nonlinearity", le.nonlinearity(seg, smb))
    print("symmetry", le.symmetry(seg, smb), "similarity", le.similarity(seg, corpus))
    print("elements", bin(le.element_bits(seg, smb)))
    result = le.play(seg, smb)
    assert 0.0 <= result.fitness <= 1.0
    assert result.completed == (result.fitness == 1.0)
    print(result)

    model = le.Model.train(corpus, seed=3, epochs=3, batch_size=16, hidden=[32, 16])
    z = [0.0] * 32
    decoded = model.decode(z)
    mu, log_var = model.encode(decoded)
    assert len(mu) == len(log_var) == 32
    try:
        model.decode([0.0] * 3)
    except ValueError:
        pass
    else:
        raise AssertionError("short latent accepted")

    archive = le.evolve(model, corpus, "denl", seed=4, generations=200, init_population=40)
    assert archive.archive_size == 16705
    elites = archive.elites()
    assert len(elites) == archive.occupied > 0
    assert abs(sum(e["fitness"] for e in elites) - archive.qd_score) < 1e-9
    print(archive.summary())

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        corpus.save(tmp / "corpus")
        back = le.Corpus.load(tmp / "corpus")
        assert len(back) == len(corpus)
        model.save(tmp / "model", corpus)
        assert le.Model.load(tmp / "model").hash == model.hash
        archive.save_csv(tmp / "archive.csv")

    print("smoke test passed")


if __name__ == "__main__":
    main()
