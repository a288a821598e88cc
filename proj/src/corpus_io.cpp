#include "seg/corpus_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seg/errors.hpp"
#include "seg/utf8.hpp"

namespace fs = std::filesystem;

namespace seg {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

RawDocument load_document(const std::string& id, const fs::path& path) {
    std::string bytes = read_file(path);
    // Drop a UTF-8 BOM if present.
    if (bytes.size() >= 3 && bytes.compare(0, 3, "\xEF\xBB\xBF") == 0) bytes.erase(0, 3);
    return RawDocument{id, utf8::decode(bytes, path.string())};
}

Corpus load_from_manifest(const std::string& name, const fs::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("documents") || !manifest["documents"].is_array())
        throw IoError("manifest " + manifest_path.string() + " lacks a \"documents\" array");
    Corpus corpus{name, {}};
    const fs::path base = manifest_path.parent_path();
    for (const auto& entry : manifest["documents"]) {
        if (!entry.contains("id") || !entry.contains("path"))
            throw IoError("manifest " + manifest_path.string() +
                          ": each document needs \"id\" and \"path\"");
        fs::path doc_path = entry["path"].get<std::string>();
        if (doc_path.is_relative()) doc_path = base / doc_path;
        corpus.documents.push_back(load_document(entry["id"].get<std::string>(), doc_path));
    }
    return corpus;
}

}  // namespace

Corpus load_corpus(const std::string& name, const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("corpus path does not exist: " + path.string());
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        Corpus corpus{name, {}};
        for (const fs::path& f : files)
            corpus.documents.push_back(load_document(f.stem().string(), f));
        return corpus;
    }
    if (path.extension() == ".json") return load_from_manifest(name, path);
    Corpus corpus{name, {}};
    corpus.documents.push_back(load_document(path.stem().string(), path));
    return corpus;
}

nlohmann::json stats_json(const std::string& name, const CorpusStats& stats) {
    nlohmann::json j;
    j["name"] = name;
    j["noc"] = stats.noc;
    j["nop"] = stats.nop;
    const double r = stats.ratio();
    if (std::isnan(r))
        j["ratio"] = nullptr;  // empty corpus: ratio undefined
    else
        j["ratio"] = r;
    return j;
}

}  // namespace seg
