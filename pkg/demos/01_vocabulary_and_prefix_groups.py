"""Tour of the vocabulary layer: the bundled Dalvik instruction set,
encoding/decoding, and the prefix-based similar-instruction groups."""

from opcaug import build_prefix_table, decode, default_dalvik_vocabulary, encode

vocab = default_dalvik_vocabulary()
print(f"Dalvik vocabulary: {vocab.size} entries (218 mnemonics + blank at index 0)")
print("first entries:", vocab.mnemonics[:6])

tokens = ["const/4", "new-instance", "invoke-direct", "move-result-object", "return-object"]
indices = encode(vocab, tokens)
print("\nencode", tokens)
print("   ->", indices.tolist())
print("decode back:", decode(vocab, indices))

table = build_prefix_table(vocab)
print("\nprefix groups (start-anchored match):")
for name in ("move", "const-wide", "if-eqz", "cmp-long", "iget", "nop"):
    group = table.groups[vocab.index_of[name]]
    members = [vocab.mnemonics[i] for i in group[:6]]
    tail = " ..." if len(group) > 6 else ""
    print(f"  {name:12s} -> {len(group):2d} neighbours  {members}{tail}")

print("\nOpcodes with an empty group (like iget) fall back to random")
print("replacement when the similar-instructions augmentation runs.")
