#pragma once

#include <fstream>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace llmrl::roles {

/// Appends one JSON document per line, flushing after every record.
class JsonlWriter {
public:
    /// Truncates an existing file unless `append` is set. Throws ConfigError if the file
    /// cannot be opened.
    explicit JsonlWriter(const std::string& path, bool append = false);

    void write(const nlohmann::json& row);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace llmrl::roles
