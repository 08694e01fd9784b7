"""Reference evaluation of the keyed-hash PRF: BLAKE2b-256 in keyed mode over
the 8-byte big-endian index."""
import hashlib

key = bytes(range(32))
for index in (0, 1, 5):
    digest = hashlib.blake2b(index.to_bytes(8, "big"), key=key, digest_size=32).hexdigest()
    print(index, digest)
