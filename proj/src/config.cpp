#include "snntcl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "snntcl/serialize.hpp"

namespace snntcl {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ValidationError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError("config: unknown key '" + it.key() + "' in " +
                            where);
}

LossFamily family_from(const std::string& s) {
  if (s == "BL") return LossFamily::BL;
  if (s == "TET") return LossFamily::TET;
  if (s == "TCL") return LossFamily::TCL;
  if (s == "STCL") return LossFamily::STCL;
  throw ValidationError("config: unknown loss family '" + s + "'");
}

std::string family_str(LossFamily f) {
  switch (f) {
    case LossFamily::BL: return "BL";
    case LossFamily::TET: return "TET";
    case LossFamily::TCL: return "TCL";
    case LossFamily::STCL: return "STCL";
  }
  return "?";
}

}  // namespace

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("optim: lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ValidationError("optim: momentum must be in [0,1)");
  if (weight_decay < 0.0)
    throw ValidationError("optim: weight_decay must be >= 0");
  if (batch_size == 0) throw ValidationError("optim: batch_size must be >= 1");
}

double OptimConfig::lr_at(std::size_t epoch) const {
  if (lr_schedule == LrSchedule::Constant || epochs <= 1) return lr;
  const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
  return lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

void RunConfig::validate() const {
  if (T < 1) throw ValidationError("config: T must be >= 1");
  lif.validate();
  loss.validate();
  optim.validate();
  if (!data.use_synthetic && data.dir.empty())
    throw ValidationError("config: data needs a dir or a synthetic spec");
}

void RunConfig::resolve_encoder(const Dataset& train) {
  const std::size_t in_ch = train.channels();
  const std::size_t side = train.side();
  if (!encoder_preset.empty()) {
    if (encoder_preset != "tiny-sew")
      throw ValidationError("config: unknown encoder preset '" +
                            encoder_preset + "'");
    const std::size_t proj = encoder.proj_dim;
    encoder = EncoderConfig::tiny_sew(in_ch, side, train.class_count);
    encoder.proj_dim = proj;
  } else {
    encoder.in_channels = in_ch;
    encoder.image_side = side;
    encoder.classes = train.class_count;
  }
  encoder.validate();
}

std::string RunConfig::to_json() const {
  json j;
  j["T"] = T;
  j["augment"] = augment == AugmentPreset::None       ? "none"
                 : augment == AugmentPreset::Standard ? "standard"
                                                      : "full";
  json enc;
  if (!encoder_preset.empty()) enc["preset"] = encoder_preset;
  enc["in_channels"] = encoder.in_channels;
  enc["image_side"] = encoder.image_side;
  enc["classes"] = encoder.classes;
  enc["proj_dim"] = encoder.proj_dim;
  enc["tap_blocks"] = encoder.tap_blocks;
  json blocks = json::array();
  for (const auto& b : encoder.blocks) {
    json jb;
    jb["type"] = b.kind == BlockSpec::Kind::Conv ? "conv" : "linear";
    jb["out"] = b.out;
    jb["kernel"] = b.kernel;
    jb["stride"] = b.stride;
    jb["batchnorm"] = b.batchnorm;
    jb["residual"] = b.residual;
    blocks.push_back(jb);
  }
  enc["blocks"] = blocks;
  j["encoder"] = enc;
  j["lif"] = {{"alpha", lif.alpha},
              {"v_th", lif.v_th},
              {"surrogate",
               {{"kind", lif.surrogate == SurrogateKind::Rectangular
                             ? "rectangular"
                             : "triangular"},
                {"width", lif.surrogate_width}}},
              {"reset_detach", lif.reset_detach}};
  json jl;
  jl["family"] = family_str(loss.family);
  jl["tau"] = loss.tau;
  jl["lambda"] = loss.lambda;
  jl["supervised"] = loss.supervised;
  if (!loss.tap_weights.empty()) jl["tap_weights"] = loss.tap_weights;
  j["loss"] = jl;
  j["optim"] = {{"lr", optim.lr},
                {"momentum", optim.momentum},
                {"weight_decay", optim.weight_decay},
                {"epochs", optim.epochs},
                {"batch_size", optim.batch_size},
                {"lr_schedule",
                 optim.lr_schedule == LrSchedule::Cosine ? "cosine" : "constant"},
                {"seed", optim.seed}};
  json jd;
  if (data.use_synthetic) {
    jd["synthetic"] = {{"classes", data.synthetic.classes},
                       {"samples_per_class", data.synthetic.samples_per_class},
                       {"image_side", data.synthetic.image_side},
                       {"temporal", data.synthetic.temporal},
                       {"event_steps", data.synthetic.event_steps},
                       {"channels", data.synthetic.channels},
                       {"noise", data.synthetic.noise},
                       {"seed", data.synthetic.seed}};
    jd["eval_per_class"] = data.synthetic_eval_per_class;
  } else {
    jd["dir"] = data.dir;
  }
  j["data"] = jd;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: JSON parse error: ") + e.what());
  }
  check_keys(j, "run config",
             {"T", "augment", "encoder", "lif", "loss", "optim", "data"});
  RunConfig cfg;
  if (j.contains("T")) cfg.T = j["T"].get<std::size_t>();
  if (j.contains("augment")) {
    const std::string a = j["augment"].get<std::string>();
    if (a == "none") cfg.augment = AugmentPreset::None;
    else if (a == "standard") cfg.augment = AugmentPreset::Standard;
    else if (a == "full") cfg.augment = AugmentPreset::Full;
    else throw ValidationError("config: unknown augment preset '" + a + "'");
  }
  if (j.contains("encoder")) {
    const json& enc = j["encoder"];
    check_keys(enc, "encoder",
               {"preset", "in_channels", "image_side", "classes", "proj_dim",
                "tap_blocks", "blocks"});
    if (enc.contains("preset"))
      cfg.encoder_preset = enc["preset"].get<std::string>();
    if (enc.contains("in_channels"))
      cfg.encoder.in_channels = enc["in_channels"].get<std::size_t>();
    if (enc.contains("image_side"))
      cfg.encoder.image_side = enc["image_side"].get<std::size_t>();
    if (enc.contains("classes"))
      cfg.encoder.classes = enc["classes"].get<std::size_t>();
    if (enc.contains("proj_dim"))
      cfg.encoder.proj_dim = enc["proj_dim"].get<std::size_t>();
    if (enc.contains("tap_blocks"))
      cfg.encoder.tap_blocks =
          enc["tap_blocks"].get<std::vector<std::size_t>>();
    if (enc.contains("blocks")) {
      for (const json& jb : enc["blocks"]) {
        check_keys(jb, "encoder block",
                   {"type", "out", "kernel", "stride", "batchnorm", "residual"});
        BlockSpec b;
        const std::string type = jb.at("type").get<std::string>();
        if (type == "conv") b.kind = BlockSpec::Kind::Conv;
        else if (type == "linear") b.kind = BlockSpec::Kind::Linear;
        else throw ValidationError("config: unknown block type '" + type + "'");
        b.out = jb.at("out").get<std::size_t>();
        if (jb.contains("kernel")) b.kernel = jb["kernel"].get<std::size_t>();
        if (jb.contains("stride")) b.stride = jb["stride"].get<std::size_t>();
        if (jb.contains("batchnorm")) b.batchnorm = jb["batchnorm"].get<bool>();
        if (jb.contains("residual")) b.residual = jb["residual"].get<bool>();
        cfg.encoder.blocks.push_back(b);
      }
    }
  } else {
    cfg.encoder_preset = "tiny-sew";
  }
  if (cfg.encoder.blocks.empty() && cfg.encoder_preset.empty())
    cfg.encoder_preset = "tiny-sew";
  if (j.contains("lif")) {
    const json& jl = j["lif"];
    check_keys(jl, "lif", {"alpha", "v_th", "surrogate", "reset_detach"});
    if (jl.contains("alpha")) cfg.lif.alpha = jl["alpha"].get<double>();
    if (jl.contains("v_th")) cfg.lif.v_th = jl["v_th"].get<double>();
    if (jl.contains("reset_detach"))
      cfg.lif.reset_detach = jl["reset_detach"].get<bool>();
    if (jl.contains("surrogate")) {
      const json& js = jl["surrogate"];
      check_keys(js, "surrogate", {"kind", "width"});
      if (js.contains("kind")) {
        const std::string k = js["kind"].get<std::string>();
        if (k == "rectangular") cfg.lif.surrogate = SurrogateKind::Rectangular;
        else if (k == "triangular") cfg.lif.surrogate = SurrogateKind::Triangular;
        else throw ValidationError("config: unknown surrogate kind '" + k + "'");
      }
      if (js.contains("width"))
        cfg.lif.surrogate_width = js["width"].get<double>();
    }
  }
  if (j.contains("loss")) {
    const json& jl = j["loss"];
    check_keys(jl, "loss", {"family", "tau", "lambda", "supervised", "tap_weights"});
    if (jl.contains("family"))
      cfg.loss.family = family_from(jl["family"].get<std::string>());
    cfg.loss.lambda = LossConfig::default_lambda(cfg.loss.family);
    if (jl.contains("tau")) cfg.loss.tau = jl["tau"].get<double>();
    if (jl.contains("lambda")) cfg.loss.lambda = jl["lambda"].get<double>();
    if (jl.contains("supervised"))
      cfg.loss.supervised = jl["supervised"].get<bool>();
    if (jl.contains("tap_weights"))
      cfg.loss.tap_weights = jl["tap_weights"].get<std::vector<double>>();
  }
  if (j.contains("optim")) {
    const json& jo = j["optim"];
    check_keys(jo, "optim",
               {"lr", "momentum", "weight_decay", "epochs", "batch_size",
                "lr_schedule", "seed"});
    if (jo.contains("lr")) cfg.optim.lr = jo["lr"].get<double>();
    if (jo.contains("momentum")) cfg.optim.momentum = jo["momentum"].get<double>();
    if (jo.contains("weight_decay"))
      cfg.optim.weight_decay = jo["weight_decay"].get<double>();
    if (jo.contains("epochs")) cfg.optim.epochs = jo["epochs"].get<std::size_t>();
    if (jo.contains("batch_size"))
      cfg.optim.batch_size = jo["batch_size"].get<std::size_t>();
    if (jo.contains("seed")) cfg.optim.seed = jo["seed"].get<std::uint64_t>();
    if (jo.contains("lr_schedule")) {
      const std::string s = jo["lr_schedule"].get<std::string>();
      if (s == "constant") cfg.optim.lr_schedule = LrSchedule::Constant;
      else if (s == "cosine") cfg.optim.lr_schedule = LrSchedule::Cosine;
      else throw ValidationError("config: unknown lr_schedule '" + s + "'");
    }
  }
  if (j.contains("data")) {
    const json& jd = j["data"];
    check_keys(jd, "data", {"dir", "synthetic", "eval_per_class"});
    if (jd.contains("dir")) cfg.data.dir = jd["dir"].get<std::string>();
    if (jd.contains("eval_per_class"))
      cfg.data.synthetic_eval_per_class = jd["eval_per_class"].get<std::size_t>();
    if (jd.contains("synthetic")) {
      const json& js = jd["synthetic"];
      check_keys(js, "synthetic",
                 {"classes", "samples_per_class", "image_side", "temporal",
                  "event_steps", "channels", "noise", "seed"});
      cfg.data.use_synthetic = true;
      auto& s = cfg.data.synthetic;
      if (js.contains("classes")) s.classes = js["classes"].get<std::size_t>();
      if (js.contains("samples_per_class"))
        s.samples_per_class = js["samples_per_class"].get<std::size_t>();
      if (js.contains("image_side"))
        s.image_side = js["image_side"].get<std::size_t>();
      if (js.contains("temporal")) s.temporal = js["temporal"].get<bool>();
      if (js.contains("event_steps"))
        s.event_steps = js["event_steps"].get<std::size_t>();
      if (js.contains("channels")) s.channels = js["channels"].get<std::size_t>();
      if (js.contains("noise")) s.noise = js["noise"].get<double>();
      if (js.contains("seed")) s.seed = js["seed"].get<std::uint64_t>();
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

std::uint64_t RunConfig::arch_hash() const {
  json enc;
  enc["in_channels"] = encoder.in_channels;
  enc["classes"] = encoder.classes;
  enc["proj_dim"] = encoder.proj_dim;
  enc["tap_blocks"] = encoder.taps();
  json blocks = json::array();
  for (const auto& b : encoder.blocks)
    blocks.push_back({{"kind", static_cast<int>(b.kind)},
                      {"out", b.out},
                      {"kernel", b.kernel},
                      {"stride", b.stride},
                      {"batchnorm", b.batchnorm},
                      {"residual", b.residual}});
  enc["blocks"] = blocks;
  return fnv1a(enc.dump());
}

}  // namespace snntcl
