#include "llmrl/roles/jsonl.hpp"

#include "llmrl/errors.hpp"

namespace llmrl::roles {

JsonlWriter::JsonlWriter(const std::string& path, bool append)
    : path_(path), out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw ConfigError("cannot open '" + path + "' for writing");
}

void JsonlWriter::write(const nlohmann::json& row) {
    std::lock_guard lock(mutex_);
    out_ << row.dump() << '\n';
    out_.flush();
}

}  // namespace llmrl::roles
