#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/ini.hpp"
#include "myodyn/network.hpp"

namespace myodyn {

// Trained state: network weights plus everything needed to turn raw head
// outputs into physical predictions and to report identified parameters.
struct Checkpoint {
  NetworkWeights weights;
  std::vector<std::string> muscle_names;
  std::vector<double> f_scale;  // per-muscle force head scaling (N)
  std::vector<std::string> param_names;
  std::vector<double> identified;
  std::vector<double> param_initials;
};

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto& cfg = cp.weights.cfg;
  out << "myodyn-checkpoint v1\n";
  out << "activation " << to_string(cfg.activation) << "\n";
  out << "smooth_angle_head " << (cfg.smooth_angle_head ? 1 : 0) << "\n";
  out << "dropout_rate " << ini::format_double(cfg.dropout_rate) << "\n";
  out << "n_muscles " << cfg.n_muscles << "\n";
  out << "input_dim " << cfg.input_dim << "\n";
  out << "hidden";
  for (int h : cfg.hidden) out << " " << h;
  out << "\n";
  out << "muscles";
  for (const auto& name : cp.muscle_names) out << " " << name;
  out << "\n";
  out << "f_scale";
  for (double v : cp.f_scale) out << " " << ini::format_double(v);
  out << "\n";
  for (size_t i = 0; i < cp.param_names.size(); ++i)
    out << "param " << cp.param_names[i] << " " << ini::format_double(cp.identified[i]) << " "
        << ini::format_double(cp.param_initials[i]) << "\n";
  for (size_t li = 0; li < cp.weights.layers.size(); ++li) {
    const auto& l = cp.weights.layers[li];
    out << "tensor " << li << " w " << l.out << " " << l.in << "\n";
    for (int i = 0; i < l.out; ++i) {
      for (int j = 0; j < l.in; ++j) {
        if (j) out << " ";
        out << ini::format_double(l.w[static_cast<size_t>(i) * l.in + j]);
      }
      out << "\n";
    }
    out << "tensor " << li << " b " << l.out << "\n";
    for (int i = 0; i < l.out; ++i) {
      if (i) out << " ";
      out << ini::format_double(l.b[i]);
    }
    out << "\n";
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "myodyn-checkpoint v1")
    throw std::invalid_argument(path + ": not a myodyn checkpoint");

  Checkpoint cp;
  NetworkConfig cfg;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(path + ": malformed checkpoint (" + what + ")");
  };

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "activation") {
      std::string v;
      ls >> v;
      cfg.activation = activation_from_string(v);
    } else if (key == "smooth_angle_head") {
      int v;
      ls >> v;
      cfg.smooth_angle_head = v != 0;
    } else if (key == "dropout_rate") {
      ls >> cfg.dropout_rate;
    } else if (key == "n_muscles") {
      ls >> cfg.n_muscles;
    } else if (key == "input_dim") {
      ls >> cfg.input_dim;
    } else if (key == "hidden") {
      for (auto& h : cfg.hidden)
        if (!(ls >> h)) fail("hidden widths");
    } else if (key == "muscles") {
      std::string name;
      while (ls >> name) cp.muscle_names.push_back(name);
    } else if (key == "f_scale") {
      double v;
      while (ls >> v) cp.f_scale.push_back(v);
    } else if (key == "param") {
      std::string name;
      double est, init;
      if (!(ls >> name >> est >> init)) fail("param line");
      cp.param_names.push_back(name);
      cp.identified.push_back(est);
      cp.param_initials.push_back(init);
    } else if (key == "tensor") {
      size_t li;
      std::string which;
      int rows, cols = 1;
      if (!(ls >> li >> which >> rows)) fail("tensor header");
      if (which == "w" && !(ls >> cols)) fail("tensor header");
      if (cp.weights.layers.size() <= li) cp.weights.layers.resize(li + 1);
      auto& layer = cp.weights.layers[li];
      if (which == "w") {
        layer.out = rows;
        layer.in = cols;
        layer.w.resize(static_cast<size_t>(rows) * cols);
        for (int i = 0; i < rows; ++i) {
          if (!std::getline(in, line)) fail("tensor rows");
          std::istringstream row(line);
          for (int j = 0; j < cols; ++j)
            if (!(row >> layer.w[static_cast<size_t>(i) * cols + j])) fail("tensor cell");
        }
      } else if (which == "b") {
        layer.b.resize(rows);
        if (!std::getline(in, line)) fail("bias row");
        std::istringstream row(line);
        for (int i = 0; i < rows; ++i)
          if (!(row >> layer.b[i])) fail("bias cell");
      } else {
        fail("tensor kind");
      }
    } else {
      fail("unknown key " + key);
    }
  }
  cp.weights.cfg = cfg;
  validate(cfg);
  if (static_cast<int>(cp.muscle_names.size()) != cfg.n_muscles) fail("muscle names");
  if (cp.f_scale.size() != cp.muscle_names.size()) fail("f_scale width");
  if (cp.weights.layers.size() != cfg.hidden.size() + 2) fail("layer count");
  return cp;
}

}  // namespace myodyn
