#include "cslab/output.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#include "cslab/config.hpp"

#ifndef CSLAB_VERSION_STRING
#define CSLAB_VERSION_STRING "0.0.0"
#endif

namespace cslab {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) text_ += ',';
        text_ += header[i];
    }
    text_ += '\n';
}

CsvTable& CsvTable::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvTable& CsvTable::cell(std::uint64_t v) { return cell(std::string_view(std::to_string(v))); }

CsvTable& CsvTable::cell(std::string_view v) {
    if (pending_) text_ += ',';
    text_ += v;
    ++pending_;
    return *this;
}

void CsvTable::end_row() {
    if (pending_ != columns_) throw std::logic_error("CSV row has the wrong number of cells");
    text_ += '\n';
    pending_ = 0;
    ++rows_;
}

ArtifactWriter::ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

void ArtifactWriter::write(const std::string& name, std::string_view content) {
    const std::filesystem::path rel(name);
    if (rel.is_absolute() || rel.empty()) throw std::invalid_argument("artifact name must be relative: " + name);
    for (const auto& part : rel)
        if (part == "..") throw std::invalid_argument("artifact name escapes the output directory: " + name);
    const auto path = root_ / rel;
    if (rel.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw std::runtime_error("write failed for " + path.string());
    ArtifactRecord rec{rel.generic_string(), content.size(), sha256_hex(content)};
    auto it = std::find_if(artifacts_.begin(), artifacts_.end(), [&](const auto& a) { return a.name == rec.name; });
    if (it != artifacts_.end())
        *it = rec;
    else
        artifacts_.push_back(rec);
}

void ArtifactWriter::write_manifest(const std::string& config_hash, std::optional<double> wall_clock_seconds) {
    auto sorted = artifacts_;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    nlohmann::ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config_sha256"] = config_hash;
    doc["code_version"] = code_version();
    if (wall_clock_seconds) doc["wall_clock_seconds"] = *wall_clock_seconds;
    doc["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& a : sorted)
        doc["artifacts"].push_back({{"name", a.name}, {"size", a.size}, {"sha256", a.sha256}});
    const std::string text = doc.dump(2) + "\n";
    std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << text;
}

std::string code_version() { return CSLAB_VERSION_STRING; }

}  // namespace cslab
