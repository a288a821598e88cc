#ifndef SEG_CONFIG_JSON_HPP
#define SEG_CONFIG_JSON_HPP

#include "json.hpp"

namespace seg {

struct CharClassConfig;
struct SplitSpec;
struct EmbeddingConfig;
struct ModelConfig;

// JSON round-trips for the config types. Every key mirrors a CLI flag; the
// shared schema is documented in the README.
nlohmann::json chars_to_json(const CharClassConfig& c);
CharClassConfig chars_from_json(const nlohmann::json& j);

nlohmann::json split_to_json(const SplitSpec& s);
SplitSpec split_from_json(const nlohmann::json& j);

nlohmann::json embedding_to_json(const EmbeddingConfig& c);
EmbeddingConfig embedding_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const ModelConfig& c);
ModelConfig model_from_json(const nlohmann::json& j);

}  // namespace seg

#endif  // SEG_CONFIG_JSON_HPP
