#include "msti/json_io.hpp"

namespace msti {

void to_json(nlohmann::json& j, const BBox& b) {
  j = nlohmann::json::array({b.xmin, b.ymin, b.xmax, b.ymax});
}

void from_json(const nlohmann::json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(errc::parse_error, "box must be [xmin,ymin,xmax,ymax]");
  }
  b.xmin = j[0].get<int>();
  b.ymin = j[1].get<int>();
  b.xmax = j[2].get<int>();
  b.ymax = j[3].get<int>();
}

void to_json(nlohmann::json& j, const Sample& s) {
  j = nlohmann::json{
      {"id", s.id},
      {"image_path", s.image_path},
      {"text", s.text},
      {"label", static_cast<int>(s.label)},
      {"visual_targets", s.visual_targets},
      {"text_target", s.text_target},
      {"split", std::string(to_string(s.split))},
      {"origin", s.origin},
  };
  if (s.image_width) j["image_width"] = *s.image_width;
  if (s.image_height) j["image_height"] = *s.image_height;
  if (s.rationale) j["rationale"] = *s.rationale;
}

void from_json(const nlohmann::json& j, Sample& s) {
  s.id = j.at("id").get<std::string>();
  s.image_path = j.value("image_path", std::string{});
  s.text = j.value("text", std::string{});

  const nlohmann::json& label = j.at("label");
  if (label.is_number_integer()) {
    const int v = label.get<int>();
    if (v != 0 && v != 1) {
      throw Error(errc::parse_error, "label must be 0 or 1");
    }
    s.label = static_cast<Label>(v);
  } else if (label.is_string()) {
    auto parsed = label_from_string(label.get<std::string>());
    if (!parsed) {
      throw Error(errc::parse_error, "unknown label " + label.dump());
    }
    s.label = *parsed;
  } else {
    throw Error(errc::parse_error, "label must be an integer or string");
  }

  s.visual_targets.clear();
  if (j.contains("visual_targets")) {
    s.visual_targets = j.at("visual_targets").get<std::vector<BBox>>();
  }
  s.text_target = j.value("text_target", std::string{});

  if (j.contains("image_width")) s.image_width = j.at("image_width").get<int>();
  if (j.contains("image_height")) {
    s.image_height = j.at("image_height").get<int>();
  }
  if (j.contains("rationale")) {
    s.rationale = j.at("rationale").get<std::string>();
  }

  const std::string split = j.value("split", std::string{"train"});
  auto parsed_split = split_from_string(split);
  if (!parsed_split) {
    throw Error(errc::parse_error, "unknown split " + split);
  }
  s.split = *parsed_split;
  s.origin = j.value("origin", std::string{});
}

void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = nlohmann::json{
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"beta3", c.beta3},
      {"beta4", c.beta4},
      {"beta5", c.beta5},
      {"n_box_max", c.n_box_max},
      {"think_word_cap", c.think_word_cap},
      {"copy_ratio_cap", c.copy_ratio_cap},
      {"epsilon_std", c.epsilon_std},
      {"graded_text_reward", c.graded_text_reward},
  };
}

void from_json(const nlohmann::json& j, RewardConfig& c) {
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.beta3 = j.value("beta3", c.beta3);
  c.beta4 = j.value("beta4", c.beta4);
  c.beta5 = j.value("beta5", c.beta5);
  c.n_box_max = j.value("n_box_max", c.n_box_max);
  c.think_word_cap = j.value("think_word_cap", c.think_word_cap);
  c.copy_ratio_cap = j.value("copy_ratio_cap", c.copy_ratio_cap);
  c.epsilon_std = j.value("epsilon_std", c.epsilon_std);
  c.graded_text_reward = j.value("graded_text_reward", c.graded_text_reward);
  validate(c);
}

void to_json(nlohmann::json& j, const RewardVector& v) {
  j = nlohmann::json{{"fmt", v.fmt},   {"acc", v.acc},   {"box", v.box},
                     {"txt", v.txt},   {"over", v.over}, {"total", v.total}};
}

void to_json(nlohmann::json& j, const ParsedResponse& r) {
  j = nlohmann::json{
      {"format_ok", r.format_ok},
      {"failure", to_string(r.failure)},
      {"failed_field", r.failed_field},
      {"think", r.think},
      {"answer",
       {{"label", std::string(to_string(r.answer.label))},
        {"boxes", r.answer.boxes},
        {"keywords", r.answer.keywords}}},
  };
}

}  // namespace msti
