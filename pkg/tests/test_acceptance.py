"""Acceptance gate: ten end-to-end checks with explicit tolerances.

Each test prints a single verdict line (visible with -s or on failure) and
asserts the same condition, so the suite both documents and enforces the bar.
Training-based checks pin every seed; they are deterministic on CPU.
"""

import math
import re
import string
import time

import numpy as np
import torch

from hazardbench.dataset import (
    BBox,
    DEFAULT_RETRIEVAL_COUNTS,
    EntityAnnotation,
    Sample,
    SynthSpec,
    load_corpus,
    select_retrieval_subset,
    synthesize_corpus,
)
from hazardbench.dataset.validate import validate_sample
from hazardbench.evaluation import (
    MockJudgeClient,
    ScoreMatrix,
    bleu4,
    caption_metrics,
    rank_of_gold,
    retrieval_metrics,
    rouge_l,
    run_judge,
)
from hazardbench.generation.model import GEN_TAP_CONFIG, TapConfig
from hazardbench.generation.train import (
    GenTrainConfig,
    frozen_state_digest,
    prepare_gen_images,
    train_generation,
)
from hazardbench.pipeline import RunConfig, run_pipeline
from hazardbench.preprocess import RenderStyle, render_entity_boxes, shuffle_entities
from hazardbench.retrieval.aux_encoder import AuxEncoderConfig
from hazardbench.retrieval.losses import itc_loss, itm_loss
from hazardbench.retrieval.train import RetrievalTrainConfig, eval_batch, train_retrieval

torch.set_num_threads(4)


def verdict(number: int, name: str, ok: bool, detail: str = ""):
    line = f"[criterion {number:02d}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


# ------------------------------------------------------------------ criterion 1


def test_criterion_01_blend_exactness():
    rng = np.random.default_rng(0)
    checked = 0
    mismatches = 0
    for _ in range(100):
        h, w = 10, 10
        image = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        color = tuple(int(v) for v in rng.integers(0, 256, size=3))
        alpha = float(rng.uniform(0.0, 1.0))
        style = RenderStyle(alpha=alpha, palette={1: color, 2: color, 3: color})
        ent = EntityAnnotation(1, BBox(0, 0, w, h), "x")
        out = render_entity_boxes(image, [ent], style).pixels
        for y in range(h):
            for x in range(w):
                for ch in range(3):
                    expected = int(math.floor(alpha * color[ch] + (1.0 - alpha) * image[y, x, ch] + 0.5))
                    if int(out[y, x, ch]) != expected:
                        mismatches += 1
                    checked += 1
    white = np.full((4, 4, 3), 255, dtype=np.uint8)
    worked = render_entity_boxes(white, [EntityAnnotation(1, BBox(0, 0, 4, 4), "x")]).pixels
    worked_case = tuple(int(v) for v in worked[1, 1])
    worked_ok = worked_case == (179, 102, 179)
    verdict(
        1,
        "blend matches scalar oracle bit-exact",
        checked >= 10_000 and mismatches == 0 and worked_ok,
        f"{checked} channel blends, {mismatches} mismatches, worked case {worked_case}",
    )


# ------------------------------------------------------------------ criterion 2


def test_criterion_02_metric_oracle_equivalence():
    rng = np.random.default_rng(1)
    exact = True
    for _ in range(1000):
        q = int(rng.integers(1, 21))
        c = int(rng.integers(1, 21))
        scores = rng.integers(0, 6, size=(q, c)).astype(float)  # small range forces ties
        gold = rng.integers(0, c, size=q)
        for row, g in zip(scores, gold):
            order = sorted(range(c), key=lambda i: -row[i])
            brute = next(pos for pos, i in enumerate(order, start=1) if row[i] == row[int(g)])
            if rank_of_gold(row, int(g)) != brute:
                exact = False
    trials = []
    for _ in range(250):
        scores = rng.uniform(size=(20, 100))
        gold = rng.integers(0, 100, size=20)
        trials.append(retrieval_metrics(ScoreMatrix(scores, gold)).mean_rank)
    mean_rank = float(np.mean(trials))
    verdict(
        2,
        "rank oracle exact and uniform mean rank 50.5 +/- 1.0",
        exact and abs(mean_rank - 50.5) <= 1.0,
        f"1000 matrices exact={exact}, uniform mean rank {mean_rank:.3f} over 250 trials",
    )


# ------------------------------------------------------------------ criterion 3


def _max_rel_err_fd(fn, params, eps=1e-6):
    """Central finite differences vs autograd, float64, worst coordinate."""
    for p in params:
        p.requires_grad_(True)
    loss = fn()
    grads = torch.autograd.grad(loss, params)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.detach().view(-1)
        for i in range(flat.numel()):
            orig = float(flat[i])
            flat[i] = orig + eps
            hi = float(fn().detach())
            flat[i] = orig - eps
            lo = float(fn().detach())
            flat[i] = orig
            fd = (hi - lo) / (2 * eps)
            auto = float(g.view(-1)[i])
            scale = max(abs(fd), abs(auto), 1e-8)
            worst = max(worst, abs(fd - auto) / scale)
    return worst


def test_criterion_03_loss_correctness():
    eye = torch.eye(2, dtype=torch.float64)
    itc_identity = float(itc_loss(eye[:, :2], eye[:, :2], torch.tensor(1.0, dtype=torch.float64)))
    itc_ok = abs(itc_identity - 0.3133) <= 1e-4

    zero_logits = torch.zeros(5, dtype=torch.float64)
    itm_zero = float(itm_loss(zero_logits, torch.ones(5, dtype=torch.float64)))
    itm_ok = abs(itm_zero - math.log(2.0)) <= 1e-6

    g = torch.Generator().manual_seed(3)
    img = torch.randn(4, 6, generator=g, dtype=torch.float64)
    txt = torch.randn(4, 6, generator=g, dtype=torch.float64)
    tau = torch.tensor(0.3, dtype=torch.float64)
    itc_err = _max_rel_err_fd(lambda: itc_loss(img, txt, tau), [img, txt])

    logits = torch.randn(6, generator=g, dtype=torch.float64)
    labels = (torch.rand(6, generator=g, dtype=torch.float64) > 0.5).double()
    itm_err = _max_rel_err_fd(lambda: itm_loss(logits, labels), [logits])

    verdict(
        3,
        "ITC/ITM values and finite-difference gradients",
        itc_ok and itm_ok and itc_err < 1e-4 and itm_err < 1e-4,
        f"itc={itc_identity:.5f}, itm={itm_zero:.8f}, grad rel err itc={itc_err:.2e} itm={itm_err:.2e}",
    )


# ------------------------------------------------------------------ criterion 4


def test_criterion_04_retrieval_overfit(tmp_path):
    synthesize_corpus(SynthSpec(train=32, val=0, test=0, seed=2), tmp_path)
    corpus = load_corpus(tmp_path)
    aux = AuxEncoderConfig(layers=1, dim=64, heads=4)

    def train_r1(use_itm):
        cfg = RetrievalTrainConfig(
            epochs=200, batch_size=16, lr=2e-3, seed=0,
            use_itm=use_itm, jitter=False, entity_shuffle=False,
        )
        model, _ = train_retrieval(corpus, tmp_path, cfg, aux=aux)
        images, texts = eval_batch(corpus.split_samples("train"), tmp_path, model.backbone_cfg)
        matrix = ScoreMatrix.identity_gold(model.score_matrix(images, texts))
        return retrieval_metrics(matrix, ks=[1]).recall_at[1]

    start = time.time()
    full = train_r1(use_itm=True)
    full_minutes = (time.time() - start) / 60
    no_itm = train_r1(use_itm=False)
    verdict(
        4,
        "32-sample overfit R@1 and match-loss ablation trend",
        full >= 0.90 and full_minutes < 5.0 and no_itm <= full,
        f"full={full:.3f} in {full_minutes:.1f} min, no-itm={no_itm:.3f}",
    )


# ------------------------------------------------------------------ criterion 5


_WORDS = ("ahead", "wet", "lane", "fast", "slows", "behind", "brakes", "turns", "merges", "stops")


def _random_sample(rng) -> Sample:
    n = int(rng.integers(1, 4))
    entities = []
    for i in range(1, n + 1):
        x0 = int(rng.integers(0, 60))
        y0 = int(rng.integers(0, 40))
        entities.append(
            EntityAnnotation(i, BBox(x0, y0, x0 + int(rng.integers(4, 30)), y0 + int(rng.integers(4, 20))),
                             str(rng.choice(_WORDS)) + " " + str(rng.choice(_WORDS)))
        )
    parts = []
    for i in range(1, n + 1):
        form = ["Entity #%d", "entity #%d", "Entity # %d"][int(rng.integers(0, 3))]
        parts.append(form % i)
        parts.extend(rng.choice(_WORDS, size=int(rng.integers(1, 4))).tolist())
    if int(rng.integers(0, 2)):
        parts.append("Entity #%d" % int(rng.integers(1, n + 1)))  # repeat a reference
    parts.extend(["so", "my", "car", "must", "stop"])
    return Sample(
        id="r", image_ref="images/x.png", source="SYNTH", speed_kmh=45,
        entities=entities, hazard=" ".join(parts), split="train",
    )


def test_criterion_05_shuffle_correctness():
    rng = np.random.default_rng(7)
    failures = []
    for trial in range(1000):
        sample = _random_sample(rng)
        indices = [e.index for e in sample.entities]
        permuted = list(indices)
        rng.shuffle(permuted)
        perm = dict(zip(indices, permuted))
        inverse = {v: k for k, v in perm.items()}

        shuffled = shuffle_entities(sample, perm)
        restored = shuffle_entities(shuffled, inverse)
        if restored.hazard != sample.hazard or restored.entities != sample.entities:
            failures.append(f"trial {trial}: not inverted")
        if len(shuffled.hazard.split()) != len(sample.hazard.split()):
            failures.append(f"trial {trial}: token count changed")
        if sorted(e.description for e in shuffled.entities) != sorted(
            e.description for e in sample.entities
        ):
            failures.append(f"trial {trial}: description multiset changed")
        report = validate_sample(shuffled, image_dims=(96, 64))
        if not report.ok:
            failures.append(f"trial {trial}: {report.violations}")
    verdict(5, "entity shuffle invertible and validity-preserving",
            not failures, failures[0] if failures else "1000 trials")


# ------------------------------------------------------------------ criterion 6


def test_criterion_06_generation_contracts(tmp_path):
    taps_ok = TapConfig(stride=8).tap_layers(24) == [8, 16, 24] and GEN_TAP_CONFIG.tap_layers(6) == [2, 4, 6]

    synthesize_corpus(SynthSpec(train=8, val=0, test=0, seed=5), tmp_path)
    corpus = load_corpus(tmp_path)

    short = GenTrainConfig(epochs=2, effective_batch=8, micro_batch=4, seed=0)
    trained, _ = train_generation(corpus, tmp_path, short)
    untouched, _ = train_generation(
        corpus, tmp_path, GenTrainConfig(epochs=0, effective_batch=8, micro_batch=4, seed=0)
    )
    freeze_ok = frozen_state_digest(trained) == frozen_state_digest(untouched)

    start = time.time()
    cfg = GenTrainConfig(epochs=300, effective_batch=8, micro_batch=4, lr=1e-2, seed=0)
    model, _ = train_generation(corpus, tmp_path, cfg)
    minutes = (time.time() - start) / 60
    samples = corpus.split_samples("train")
    outputs = model.generate(prepare_gen_images(samples, tmp_path, model.vision_cfg))
    exact = sum(out == s.hazard for out, s in zip(outputs, samples))
    verdict(
        6,
        "freeze contract, tap layers, 8-sample memorization",
        taps_ok and freeze_ok and exact == 8 and minutes < 10.0,
        f"taps={taps_ok}, freeze={freeze_ok}, {exact}/8 exact in {minutes:.1f} min",
    )


# ------------------------------------------------------------------ criterion 7


def _bleu_reference(predictions, references):
    """Independent corpus BLEU-4 written against plain dict counting."""
    punct = re.compile("[" + re.escape(string.punctuation.replace("#", "")) + "]")

    def toks(t):
        return punct.sub(" ", t.lower()).split()

    def grams(tokens, n):
        d = {}
        for i in range(len(tokens) - n + 1):
            g = tuple(tokens[i : i + n])
            d[g] = d.get(g, 0) + 1
        return d

    clipped = {n: 0 for n in range(1, 5)}
    total = {n: 0 for n in range(1, 5)}
    len_pred = len_ref = 0
    for sid in predictions:
        p, r = toks(predictions[sid]), toks(references[sid])
        len_pred += len(p)
        len_ref += len(r)
        for n in range(1, 5):
            pg, rg = grams(p, n), grams(r, n)
            for g, cnt in pg.items():
                clipped[n] += min(cnt, rg.get(g, 0))
            total[n] += max(0, len(p) - n + 1)
    precisions = []
    for n in range(1, 5):
        if total[n] == 0 or clipped[n] == 0:
            return 0.0
        precisions.append(clipped[n] / total[n])
    geo = (precisions[0] * precisions[1] * precisions[2] * precisions[3]) ** 0.25
    bp = 1.0 if len_pred > len_ref else math.exp(1 - len_ref / max(1, len_pred))
    return 100.0 * bp * geo


def test_criterion_07_caption_metric_anchors():
    refs = {
        f"s{i}": f"Entity #1 {w} near the junction so my car brakes hard {i}"
        for i, w in enumerate(["swerves", "stops", "turns", "merges"])
    }
    identity, _ = caption_metrics(dict(refs), refs)
    identity_ok = identity["BLEU4"] == 100.0 and rouge_l(dict(refs), refs) == 100.0

    disjoint = {k: "alpha beta gamma delta epsilon zeta" for k in refs}
    dj, _ = caption_metrics(disjoint, refs)
    disjoint_ok = dj["BLEU4"] == 0.0 and dj["ROUGE_L"] == 0.0 and dj["CIDEr_D"] == 0.0

    rng = np.random.default_rng(11)
    vocab = ["car", "entity", "#1", "#2", "lane", "brakes", "turns", "slows", "wet", "my", "road", "stops"]
    preds, golds = {}, {}
    for i in range(20):
        preds[str(i)] = " ".join(rng.choice(vocab, size=int(rng.integers(3, 14))))
        golds[str(i)] = " ".join(rng.choice(vocab, size=int(rng.integers(5, 14))))
    ours = bleu4(preds, golds)
    theirs = _bleu_reference(preds, golds)
    agree = abs(ours - theirs) <= 0.1
    verdict(
        7,
        "caption metric identity/disjoint anchors and BLEU cross-check",
        identity_ok and disjoint_ok and agree,
        f"identity={identity_ok}, disjoint={disjoint_ok}, bleu {ours:.4f} vs reference {theirs:.4f}",
    )


# ------------------------------------------------------------------ criterion 8


def test_criterion_08_judge_harness(tmp_path):
    pairs = {f"p{i:02d}": (f"gold text {i}", f"gold text {i}") for i in range(60)}
    client = MockJudgeClient(constant_score=85)
    result = run_judge(client, pairs, tmp_path, backoff=0.0)
    sizes = [call["prompt"].count("\nReference: ") for call in client.calls]
    temps = [call["temperature"] for call in client.calls]
    first_ok = (
        sizes == [25, 25, 10]
        and temps == [0.0, 0.0, 0.0]
        and len(result.scores) == 60
        and result.mean == 85.0
    )
    second_client = MockJudgeClient(constant_score=85)
    second = run_judge(second_client, pairs, tmp_path, backoff=0.0)
    cache_ok = second.client_calls == 0 and len(second_client.calls) == 0 and second.mean == 85.0
    verdict(
        8,
        "judge batching, temperature, parsing, cache idempotence",
        first_ok and cache_ok,
        f"batches={sizes}, temps={temps}, mean={result.mean}, second-run calls={second.client_calls}",
    )


# ------------------------------------------------------------------ criterion 9


def test_criterion_09_subset_construction(tmp_path):
    synthesize_corpus(SynthSpec(train=0, val=0, test=180, seed=4), tmp_path)
    corpus = load_corpus(tmp_path)
    ids = select_retrieval_subset(corpus, "test", seed=0)
    again = select_retrieval_subset(corpus, "test", seed=0)
    by_id = corpus.by_id()
    got = {}
    for sample_id in ids:
        t = by_id[sample_id].hazard_type
        got[t] = got.get(t, 0) + 1
    verdict(
        9,
        "retrieval subset: 100 ids, stated distribution, deterministic",
        len(ids) == 100 and len(set(ids)) == 100 and got == DEFAULT_RETRIEVAL_COUNTS and ids == again,
        f"n={len(ids)}, distribution match={got == DEFAULT_RETRIEVAL_COUNTS}",
    )


# ----------------------------------------------------------------- criterion 10


def test_criterion_10_end_to_end_determinism(tmp_path):
    def run_once(base):
        cfg = RunConfig(
            corpus_root=base / "corpus",
            out_dir=base / "out",
            seed=13,
            synth={"train": 32, "val": 8, "test": 8},
            retrieval={"epochs": 3, "batch_size": 8},
        )
        return run_pipeline(cfg)

    start = time.time()
    first = run_once(tmp_path / "a")
    second = run_once(tmp_path / "b")
    minutes = (time.time() - start) / 60
    report_a = (tmp_path / "a" / "out" / "report.md").read_bytes()
    report_b = (tmp_path / "b" / "out" / "report.md").read_bytes()
    tsv_a = (tmp_path / "a" / "out" / "metrics.tsv").read_bytes()
    tsv_b = (tmp_path / "b" / "out" / "metrics.tsv").read_bytes()
    verdict(
        10,
        "toy pipeline twice with one seed: byte-identical reports",
        report_a == report_b and tsv_a == tsv_b and minutes < 10.0 and first.config_hash == second.config_hash,
        f"{len(report_a)} report bytes, both runs in {minutes:.1f} min",
    )
