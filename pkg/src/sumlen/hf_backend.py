"""Adapter onto HuggingFace seq2seq checkpoints (BART/T5 style).

Requires the ``hf`` extra (torch + transformers) and, at paper scale, a GPU;
nothing in the test suite depends on this module. Checkpoint names and
training settings live in configuration, never in code paths the test
backends use.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .backend import (
    BackendError,
    DecodingConfig,
    Seq2SeqBackend,
    TrainingConfig,
    TrainPair,
    _cap_words,
)

logger = logging.getLogger(__name__)

_WEIGHTS_SUBDIR = "weights"
# Rough words-to-subword-tokens budget used when translating the word-level
# decoding config into generate() arguments; outputs are word-capped after
# decoding either way.
_TOKENS_PER_WORD = 3


@dataclass(frozen=True)
class PretrainedSettings:
    checkpoint: str = "facebook/bart-large"
    device: str = "cpu"
    max_source_tokens: int = 1024
    max_target_tokens: int = 256
    cache_dir: str | None = None


def _import_hf():
    try:
        import torch
        import transformers
    except ImportError as exc:
        raise BackendError(
            "the pretrained backend needs the 'hf' extra (pip install 'sumlen[hf]')"
        ) from exc
    return torch, transformers


class PretrainedBackend(Seq2SeqBackend):
    kind = "pretrained"

    def __init__(self, settings: PretrainedSettings, model=None, tokenizer=None):
        self.settings = settings
        self._model = model
        self._tokenizer = tokenizer

    def _ensure_loaded(self):
        if self._model is not None:
            return
        torch, transformers = _import_hf()
        self._tokenizer = transformers.AutoTokenizer.from_pretrained(
            self.settings.checkpoint, cache_dir=self.settings.cache_dir
        )
        self._model = transformers.AutoModelForSeq2SeqLM.from_pretrained(
            self.settings.checkpoint, cache_dir=self.settings.cache_dir
        ).to(self.settings.device)
        self._model.eval()

    def fine_tune(self, pairs: Sequence[TrainPair], hyper: TrainingConfig = TrainingConfig()):
        if not pairs:
            raise BackendError("fine_tune requires at least one training pair")
        torch, _ = _import_hf()
        self._ensure_loaded()
        import copy

        torch.manual_seed(hyper.seed)
        model = copy.deepcopy(self._model).to(self.settings.device)
        model.train()
        tok = self._tokenizer
        optimizer = torch.optim.AdamW(model.parameters(), lr=hyper.learning_rate)
        for epoch in range(1, hyper.epochs + 1):
            total_loss = 0.0
            n_batches = 0
            for start in range(0, len(pairs), hyper.batch_size):
                batch = pairs[start : start + hyper.batch_size]
                inputs = tok(
                    [p.source for p in batch],
                    truncation=True,
                    max_length=self.settings.max_source_tokens,
                    padding=True,
                    return_tensors="pt",
                ).to(self.settings.device)
                labels = tok(
                    [p.target for p in batch],
                    truncation=True,
                    max_length=self.settings.max_target_tokens,
                    padding=True,
                    return_tensors="pt",
                ).input_ids.to(self.settings.device)
                labels[labels == tok.pad_token_id] = -100
                loss = model(**inputs, labels=labels).loss
                loss.backward()
                optimizer.step()
                optimizer.zero_grad()
                total_loss += float(loss.detach())
                n_batches += 1
            logger.info(
                "pretrained fine-tune epoch %d/%d: mean loss %.4f",
                epoch, hyper.epochs, total_loss / max(n_batches, 1),
            )
        model.eval()
        return PretrainedBackend(self.settings, model=model, tokenizer=tok)

    def generate(self, input_text: str, cfg: DecodingConfig = DecodingConfig()) -> str:
        torch, _ = _import_hf()
        self._ensure_loaded()
        torch.manual_seed(cfg.seed)
        inputs = self._tokenizer(
            input_text,
            truncation=True,
            max_length=self.settings.max_source_tokens,
            return_tensors="pt",
        ).to(self.settings.device)
        with torch.no_grad():
            output_ids = self._model.generate(
                **inputs,
                num_beams=cfg.beam_width,
                do_sample=False,
                max_new_tokens=min(
                    cfg.max_new_words * _TOKENS_PER_WORD, self.settings.max_target_tokens
                ),
                min_new_tokens=max(cfg.min_new_words, 1),
            )
        text = self._tokenizer.decode(output_ids[0], skip_special_tokens=True).strip()
        return _cap_words(text, cfg.max_new_words)

    def save_state(self, directory: Path) -> dict:
        weights_dir = Path(directory) / _WEIGHTS_SUBDIR
        if self._model is not None:
            self._model.save_pretrained(weights_dir)
            self._tokenizer.save_pretrained(weights_dir)
        return {
            "settings": asdict(self.settings),
            "weights_dir": _WEIGHTS_SUBDIR if self._model is not None else None,
        }

    @classmethod
    def load_state(cls, state: Mapping, directory: Path) -> "PretrainedBackend":
        settings = PretrainedSettings(**state["settings"])
        if state.get("weights_dir"):
            weights = Path(directory) / state["weights_dir"]
            if not weights.exists():
                raise BackendError(f"missing pretrained weights directory {weights}")
            settings = PretrainedSettings(
                **{**asdict(settings), "checkpoint": str(weights)}
            )
        return cls(settings)
