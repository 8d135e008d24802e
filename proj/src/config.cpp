#include <posekit/pipeline.hpp>

#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace posekit {

namespace {

double toDouble(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

long long toInt(const std::string& key, const std::string& v) {
  size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("config key '" + key + "': '" + v + "' is not an integer");
  return out;
}

int toInt32(const std::string& key, const std::string& v) {
  const long long x = toInt(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw Error("config key '" + key + "': value out of range");
  return static_cast<int>(x);
}

bool toBool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

std::string geometricSpec(const GeometricEncoderConfig& g) {
  return g.kind == GeometricEncoderConfig::Kind::Fpfh ? "fpfh" : "external:" + g.external_path.string();
}

std::string visualSpec(const VisualEncoderConfig& v) {
  return v.kind == VisualEncoderConfig::Kind::Rgb ? "rgb" : "external:" + v.external_dir.string();
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define POSEKIT_INT(member)                                                                        \
  Field {                                                                                          \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.member = toInt32(k, v); }, \
        [](const PipelineConfig& c) { return std::to_string(c.member); }                           \
  }
#define POSEKIT_DOUBLE(member)                                                                      \
  Field {                                                                                           \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.member = toDouble(k, v); }, \
        [](const PipelineConfig& c) { return fmt(c.member); }                                       \
  }
#define POSEKIT_BOOL(member)                                                                     \
  Field {                                                                                        \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.member = toBool(k, v); }, \
        [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); }         \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"n_query", POSEKIT_INT(n_query)},
      {"m_target", POSEKIT_INT(m_target)},
      {"n_views", POSEKIT_INT(n_views)},
      {"camera_distance", POSEKIT_DOUBLE(camera_distance)},
      {"template_size", POSEKIT_INT(template_size)},
      {"template_fill", POSEKIT_DOUBLE(template_fill)},
      {"geometric",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "fpfh") {
            c.geometric.kind = GeometricEncoderConfig::Kind::Fpfh;
          } else if (v.rfind("external:", 0) == 0 && v.size() > 9) {
            c.geometric.kind = GeometricEncoderConfig::Kind::External;
            c.geometric.external_path = v.substr(9);
          } else {
            throw Error("config key '" + k + "': expected fpfh or external:PATH");
          }
        },
        [](const PipelineConfig& c) { return geometricSpec(c.geometric); }}},
      {"geometric.radii",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          std::vector<double> radii;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) radii.push_back(toDouble(k, item));
          if (radii.empty()) throw Error("config key '" + k + "': empty list");
          c.geometric.radii = radii;
        },
        [](const PipelineConfig& c) {
          std::string out;
          for (size_t i = 0; i < c.geometric.radii.size(); ++i) out += (i ? "," : "") + fmt(c.geometric.radii[i]);
          return out;
        }}},
      {"target_normal_k", POSEKIT_INT(target_normal_k)},
      {"visual",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "rgb") {
            c.visual.kind = VisualEncoderConfig::Kind::Rgb;
          } else if (v.rfind("external:", 0) == 0 && v.size() > 9) {
            c.visual.kind = VisualEncoderConfig::Kind::External;
            c.visual.external_dir = v.substr(9);
          } else {
            throw Error("config key '" + k + "': expected rgb or external:PATH");
          }
        },
        [](const PipelineConfig& c) { return visualSpec(c.visual); }}},
      {"visual.grid_p", POSEKIT_INT(visual.grid_p)},
      {"visual.crop_size", POSEKIT_INT(visual.crop_size)},
      {"visual.pca_dim", POSEKIT_INT(visual.pca_dim)},
      {"visual.accept_radius", POSEKIT_DOUBLE(visual.accept_radius)},
      {"fusion.visual", POSEKIT_DOUBLE(fusion.visual)},
      {"fusion.geometric", POSEKIT_DOUBLE(fusion.geometric)},
      {"mutual_matching", POSEKIT_BOOL(mutual_matching)},
      {"ransac.iterations", POSEKIT_INT(ransac.iterations)},
      {"ransac.inlier_threshold", POSEKIT_DOUBLE(ransac.inlier_threshold)},
      {"ransac.edge_tolerance", POSEKIT_DOUBLE(ransac.edge_tolerance)},
      {"ransac.min_triangle_height", POSEKIT_DOUBLE(ransac.min_triangle_height)},
      {"ransac.seed",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.ransac.seed = static_cast<std::uint64_t>(toInt(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.ransac.seed); }}},
      {"ransac.threads", POSEKIT_INT(ransac.threads)},
      {"icp.max_iterations", POSEKIT_INT(icp.max_iterations)},
      {"icp.corr_dist", POSEKIT_DOUBLE(icp.corr_dist)},
      {"icp.eps", POSEKIT_DOUBLE(icp.eps)},
      {"icp.model_points", POSEKIT_INT(icp.model_points)},
      {"icp.stages", POSEKIT_INT(icp.stages)},
      {"symmetry.n_rotations", POSEKIT_INT(symmetry.n_rotations)},
      {"symmetry.threshold", POSEKIT_DOUBLE(symmetry.threshold)},
      {"symmetry.spacing_factor", POSEKIT_DOUBLE(symmetry.spacing_factor)},
      {"symmetry.dedup_degrees", POSEKIT_DOUBLE(symmetry.dedup_degrees)},
      {"symmetry.coarse_factor", POSEKIT_DOUBLE(symmetry.coarse_factor)},
      {"symmetry.cluster_degrees", POSEKIT_DOUBLE(symmetry.cluster_degrees)},
      {"symmetry.screen_points", POSEKIT_INT(symmetry.screen_points)},
      {"symmetry.polish_points", POSEKIT_INT(symmetry.polish_points)},
      {"symmetry.polish_iterations", POSEKIT_INT(symmetry.polish_iterations)},
      {"refine",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.refine = parseRefineMode(v); },
        [](const PipelineConfig& c) { return toString(c.refine); }}},
      {"top_k", POSEKIT_INT(top_k)},
      {"bbox_prior", POSEKIT_BOOL(bbox_prior)},
      {"seed",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.seed = static_cast<std::uint64_t>(toInt(k, v));
        },
        [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
  };
  return table;
}

#undef POSEKIT_INT
#undef POSEKIT_DOUBLE
#undef POSEKIT_BOOL

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void setConfigValue(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  // Single-letter aliases for the sample and view counts.
  const std::string k = key == "N" ? "n_query" : key == "M" ? "m_target" : key == "R" ? "n_views" : key;
  for (const auto& [name, field] : fields())
    if (name == k) {
      field.set(cfg, key, value);
      return;
    }
  throw Error("unknown config key '" + key + "'");
}

PipelineConfig loadConfig(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string key, value;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = trim(line.substr(0, eq));
      value = trim(line.substr(eq + 1));
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string::npos)
        throw Error(path.string() + " line " + std::to_string(lineno) + ": missing value");
      key = trim(line.substr(0, sp));
      value = trim(line.substr(sp + 1));
    }
    try {
      setConfigValue(base, key, value);
    } catch (const Error& e) {
      throw Error(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

std::string dumpConfig(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

}  // namespace posekit
