"""Pretrained-transformer encoder producing one vector per entity string.

Each entity is treated as a short sentence; its vector is the hidden state
at the sequence-start aggregate position.  Inference runs in evaluation
mode with gradients off and a fixed seed, so identical inputs always yield
bit-identical vectors.
"""

from __future__ import annotations

import numpy as np
import torch


class EntityEncoder:
    def __init__(self, model_id: str, max_length: int = 64, seed: int = 0):
        from transformers import AutoModel, AutoTokenizer

        torch.manual_seed(seed)
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        self.max_length = max_length
        self.hidden_size = int(self.model.config.hidden_size)

    @torch.no_grad()
    def encode_batch(self, texts: list[str]) -> np.ndarray:
        """Encode one batch; returns float32 (len(texts), hidden_size)."""
        if not texts:
            raise ValueError("cannot encode an empty batch")
        inputs = self.tokenizer(texts, padding=True, truncation=True,
                                max_length=self.max_length, return_tensors="pt")
        outputs = self.model(**inputs)
        start_vectors = outputs.last_hidden_state[:, 0, :]
        return start_vectors.numpy().astype(np.float32)

    def encode(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        chunks = [self.encode_batch(texts[i:i + batch_size])
                  for i in range(0, len(texts), batch_size)]
        return np.concatenate(chunks, axis=0)
