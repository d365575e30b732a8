#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/ini.hpp"
#include "myodyn/pinn.hpp"
#include "myodyn/trial.hpp"

namespace myodyn {

// One record per epoch followed by a [summary] block, so parameter-evolution
// plots and the identified values live in a single diffable file.
inline void save_report(const TrainReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,L_q,L_r1,L_r2,L_total,val_L_q";
  for (const auto& name : report.param_names) out << "," << name;
  out << "\n";
  for (const auto& rec : report.epochs) {
    out << rec.epoch << "," << ini::format_double(rec.lq) << "," << ini::format_double(rec.lr1)
        << "," << ini::format_double(rec.lr2) << "," << ini::format_double(rec.total) << ","
        << ini::format_double(rec.val_lq);
    for (double v : rec.mapped) out << "," << ini::format_double(v);
    out << "\n";
  }
  out << "\n[summary]\n";
  out << "best_epoch = " << report.best_epoch << "\n";
  out << "best_val_L_q = " << ini::format_double(report.best_val_lq) << "\n";
  out << "wall_seconds = " << ini::format_double(report.wall_seconds) << "\n";
  out << "baseline_fnn_mode = " << (report.baseline_mode ? "true" : "false") << "\n";
  for (size_t i = 0; i < report.param_names.size(); ++i) {
    out << "identified." << report.param_names[i] << " = "
        << ini::format_double(i < report.identified.size() ? report.identified[i] : 0.0) << "\n";
    out << "initial." << report.param_names[i] << " = "
        << ini::format_double(i < report.param_initials.size() ? report.param_initials[i] : 0.0)
        << "\n";
  }
}

inline TrainReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  TrainReport report;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty report");
  {
    const auto header = detail::split_csv(line);
    if (header.size() < 6 || header[0] != "epoch")
      throw std::invalid_argument(path + ": bad report header");
    for (size_t i = 6; i < header.size(); ++i) report.param_names.push_back(header[i]);
  }
  std::string summary_text;
  bool in_summary = false;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = ini::trim(line);
    if (t.empty()) continue;
    if (t == "[summary]") {
      in_summary = true;
      summary_text = "[summary]\n";
      continue;
    }
    if (in_summary) {
      summary_text += t + "\n";
      continue;
    }
    const auto cells = detail::split_csv(t);
    if (cells.size() != 6 + report.param_names.size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": bad record width");
    EpochRecord rec;
    rec.epoch = static_cast<int>(detail::parse_cell(cells[0], lineno, 0, path));
    rec.lq = detail::parse_cell(cells[1], lineno, 1, path);
    rec.lr1 = detail::parse_cell(cells[2], lineno, 2, path);
    rec.lr2 = detail::parse_cell(cells[3], lineno, 3, path);
    rec.total = detail::parse_cell(cells[4], lineno, 4, path);
    rec.val_lq = cells[5] == "nan" || cells[5] == "-nan"
                     ? std::numeric_limits<double>::quiet_NaN()
                     : detail::parse_cell(cells[5], lineno, 5, path);
    for (size_t i = 6; i < cells.size(); ++i)
      rec.mapped.push_back(detail::parse_cell(cells[i], lineno, i, path));
    report.epochs.push_back(rec);
  }
  if (!summary_text.empty()) {
    const IniDoc doc = ini::parse(summary_text, path);
    const auto* s = doc.find("summary");
    if (s) {
      if (const auto* v = s->find("best_epoch")) report.best_epoch = std::stoi(*v);
      if (const auto* v = s->find("best_val_L_q"))
        report.best_val_lq = ini::parse_double(*v, "best_val_L_q");
      if (const auto* v = s->find("wall_seconds"))
        report.wall_seconds = ini::parse_double(*v, "wall_seconds");
      if (const auto* v = s->find("baseline_fnn_mode")) report.baseline_mode = *v == "true";
      for (const auto& name : report.param_names) {
        if (const auto* v = s->find("identified." + name))
          report.identified.push_back(ini::parse_double(*v, name));
        if (const auto* v = s->find("initial." + name))
          report.param_initials.push_back(ini::parse_double(*v, name));
      }
    }
  }
  return report;
}

}  // namespace myodyn
