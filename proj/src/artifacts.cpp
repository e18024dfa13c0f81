#include "artifacts.hpp"

#include <fstream>

#include <json.hpp>

#include "rng.hpp"

namespace khop {

using nlohmann::json;

std::uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "file_checksum: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot open " + path.string() + " for writing");
    out << content;
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ManifestBuilder::ManifestBuilder(std::filesystem::path run_dir, std::string subcommand,
                                 std::string config_json)
    : dir_(std::move(run_dir)), subcommand_(std::move(subcommand)),
      config_json_(std::move(config_json)) {
    std::filesystem::create_directories(dir_);
}

void ManifestBuilder::add_file(const std::filesystem::path& path) {
    files_.emplace_back(std::filesystem::relative(path, dir_).generic_string(),
                        file_checksum(path));
}

void ManifestBuilder::add_note(const std::string& key, const std::string& value) {
    notes_.emplace_back(key, value);
}

void ManifestBuilder::write() {
    json j;
    j["tool"] = "khoplab";
    j["version"] = "0.1.0";
    j["subcommand"] = subcommand_;
    j["config"] = json::parse(config_json_);
    json notes = json::object();
    for (const auto& [k, v] : notes_) {
        notes[k] = v;
    }
    j["notes"] = notes;
    json files = json::array();
    for (const auto& [p, h] : files_) {
        files.push_back({{"path", p}, {"checksum", hex64(h)}});
    }
    j["artifacts"] = files;
    write_text_file(dir_ / "manifest.json", j.dump(2) + "\n");
}

} // namespace khop
