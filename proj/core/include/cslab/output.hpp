#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cslab {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Builds CSV text; numbers use the shortest round-trip decimal form.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& cell(double v);
    CsvTable& cell(std::uint64_t v);
    CsvTable& cell(std::string_view v);
    /// Ends the current row; throws std::logic_error on a column count mismatch.
    void end_row();

    std::size_t rows() const { return rows_; }
    const std::string& text() const { return text_; }

private:
    std::size_t columns_;
    std::size_t pending_ = 0;
    std::size_t rows_ = 0;
    std::string text_;
};

struct ArtifactRecord {
    std::string name;
    std::uintmax_t size = 0;
    std::string sha256;
};

/**
 * @brief Output directory that records every file it writes.
 *
 * Writes are serialized through this object; names are relative and may not
 * escape the directory.
 */
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    void write(const std::string& name, std::string_view content);
    const std::vector<ArtifactRecord>& artifacts() const { return artifacts_; }

    /// Writes manifest.json: config hash, version and the sorted artifact list.
    void write_manifest(const std::string& config_hash, std::optional<double> wall_clock_seconds = std::nullopt);

private:
    std::filesystem::path root_;
    std::vector<ArtifactRecord> artifacts_;
};

/// Version string compiled into the library.
std::string code_version();

}  // namespace cslab
