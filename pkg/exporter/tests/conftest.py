import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")

HIDDEN_SIZE = 64

# Tokens the synthetic corpora actually produce, so the WordPiece vocab
# covers the interesting words; everything else decomposes or maps to [UNK].
CODE_TOKENS = [
    "strcpy", "recv", "memcpy", "printf", "fclose", "malloc", "free",
    "fopen", "strlen", "puts", "int", "if", "char", "return",
    ";", "(", ")", "=", "+", ",", ">", "-", "[", "]", "{", "}", '"',
    "V", "F",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized BERT-style model saved locally, standing
    in for a full code-pretrained transformer (no hub access needed)."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    d = tmp_path_factory.mktemp("tiny-model")
    chars = list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_%&*./")
    vocab = list(
        dict.fromkeys(
            ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
            + chars
            + [f"##{c}" for c in chars]
            + CODE_TOKENS
        )
    )
    (d / "vocab.txt").write_text("\n".join(vocab), encoding="utf-8")
    tokenizer = BertTokenizer(str(d / "vocab.txt"))
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=512,
    )
    torch.manual_seed(1234)
    model = BertModel(config)
    model.save_pretrained(d)
    tokenizer.save_pretrained(d)
    return str(d)
