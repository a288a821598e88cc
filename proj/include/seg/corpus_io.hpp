#ifndef SEG_CORPUS_IO_HPP
#define SEG_CORPUS_IO_HPP

#include <filesystem>
#include <string>

#include "json.hpp"
#include "seg/corpus.hpp"

namespace seg {

// Loads a corpus from
//   - a directory: every *.txt file, sorted by filename, one document each;
//   - a JSON manifest {"documents": [{"id": ..., "path": ...}, ...]} with
//     paths resolved relative to the manifest;
//   - any other file: a single document.
// Throws ConfigError for a missing path, IoError for unreadable or malformed
// content.
Corpus load_corpus(const std::string& name, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

nlohmann::json stats_json(const std::string& name, const CorpusStats& stats);

}  // namespace seg

#endif  // SEG_CORPUS_IO_HPP
