#pragma once

#include <string>
#include <vector>

#include "proact/domain.hpp"
#include "proact/errors.hpp"

// Deterministic, invertible encoders backing the spurious-response
// strategies. Every codec satisfies decode(s, encode(s, p)) == p on its
// admissible input set. These exist to look obfuscated, not to be secure.
//
// Unit for CodecError::position():
//   hex/base64  character index in the encoded string
//   binary      space-separated group index
//   morse       token index (letters within words, words across "/")
//   emoji       codepoint index
//   morse encode: character index in the plaintext

namespace proact::codecs {

/// True when `plaintext` can be encoded under `s`. Only morse restricts its
/// input (A-Z, 0-9 and space after uppercasing); every other codec accepts
/// arbitrary bytes. Free-form is not a codec, so nothing is admissible.
bool is_admissible(Strategy s, const std::string& plaintext);

std::string encode(Strategy s, const std::string& plaintext);

/// Inverse of encode on each codec's canonical input form. Morse carries no
/// letter case: encode case-folds and decode emits lowercase, so lowercase
/// plaintext round-trips exactly and "SOS" comes back as "sos".
std::string decode(Strategy s, const std::string& encoded);

/// The six invertible strategies in fixed order:
/// emoji, rot13, binary, base64, hex, morse.
const std::vector<Strategy>& strategy_catalog();

}  // namespace proact::codecs
