import pytest


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized BERT saved locally, so tests run without
    network access.  Weights are seeded, hence reproducible per session."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    path = tmp_path_factory.mktemp("tinybert")
    vocab = (["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
             + list("abcdefghijklmnopqrstuvwxyz0123456789")
             + ["##" + c for c in "abcdefghijklmnopqrstuvwxyz0123456789"]
             + ["transformer", "entity", "model", "neural", "network"])
    (path / "vocab.txt").write_text("\n".join(vocab), encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(path / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(path)

    config = BertConfig(vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=64,
                        max_position_embeddings=64)
    torch.manual_seed(12345)
    BertModel(config).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def encoder(tiny_model_dir):
    from embed_exporter import EntityEncoder

    return EntityEncoder(tiny_model_dir)
