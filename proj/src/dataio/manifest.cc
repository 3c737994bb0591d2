#include "mprs/dataio/manifest.h"

#include <fstream>

#include <json.hpp>

#include "mprs/dataio/idx.h"
#include "mprs/errors.h"

namespace mprs {

using nlohmann::json;

std::string ManifestLine(const ManifestRecord& r) {
  json j{{"index", r.index},
         {"label", r.label},
         {"endpoint", r.endpoint},
         {"i_max", r.i_max},
         {"i_star", r.i_star},
         {"curvature", r.curvature},
         {"original_latent", r.original_latent},
         {"perturbed_latent", r.perturbed_latent}};
  return j.dump();
}

ManifestRecord ParseManifestLine(const std::string& line) {
  json j = json::parse(line);
  ManifestRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.label = j.at("label").get<int>();
  r.endpoint = j.at("endpoint").get<std::size_t>();
  r.i_max = j.at("i_max").get<std::size_t>();
  r.i_star = j.at("i_star").get<std::size_t>();
  r.curvature = j.at("curvature").get<std::vector<double>>();
  r.original_latent = j.at("original_latent").get<std::vector<double>>();
  r.perturbed_latent = j.at("perturbed_latent").get<std::vector<double>>();
  return r;
}

void WriteManifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << ManifestLine(r) << '\n';
}

std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ManifestRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(ParseManifestLine(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

PublishedFiles PublishedLayout(const std::filesystem::path& dir) {
  return {dir / "images.idx", dir / "labels.idx", dir / "manifest.jsonl"};
}

void WritePublished(const std::filesystem::path& dir, const LabeledDataset& data,
                    const std::vector<ManifestRecord>& manifest) {
  PublishedFiles files = PublishedLayout(dir);
  SaveIdx(data, files.images, files.labels);
  if (!manifest.empty()) WriteManifest(files.manifest, manifest);
}

LabeledDataset ReadPublishedImages(const std::filesystem::path& dir) {
  PublishedFiles files = PublishedLayout(dir);
  if (!std::filesystem::exists(files.images) || !std::filesystem::exists(files.labels)) {
    throw DataError("missing artifact: no published dataset in " + dir.string());
  }
  return LoadIdx(files.images, files.labels);
}

}  // namespace mprs
