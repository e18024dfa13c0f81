#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "common.hpp"

namespace khop {

std::uint64_t file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Collects artifact entries for the run manifest; every emitted file is
// registered exactly once.
class ManifestBuilder {
public:
    ManifestBuilder(std::filesystem::path run_dir, std::string subcommand,
                    std::string config_json);

    void add_file(const std::filesystem::path& path);
    void add_note(const std::string& key, const std::string& value);

    // Writes manifest.json into the run directory.
    void write();

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::string subcommand_;
    std::string config_json_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::vector<std::pair<std::string, std::uint64_t>> files_;
};

} // namespace khop
