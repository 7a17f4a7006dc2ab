#ifndef PINK_HASH_H_
#define PINK_HASH_H_

#include <string>
#include <string_view>

namespace pink {

// Lowercase hex SHA-256 of `data`.
std::string Sha256Hex(std::string_view data);

// Incremental SHA-256 over a sequence of fields. Each field is framed with its
// byte length so ("ab","c") and ("a","bc") hash differently.
class FieldHasher {
 public:
  FieldHasher& Add(std::string_view field);
  FieldHasher& Add(long long value);
  std::string HexDigest() const;

 private:
  std::string buffer_;
};

}  // namespace pink

#endif  // PINK_HASH_H_
