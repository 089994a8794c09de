#pragma once

// Plain-text key=value run configuration: a preset file plus flag overrides.
// Unknown keys are rejected; the effective configuration is echoed into every
// output directory so runs stay reproducible from their artifacts alone.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

struct RunConfig {
  // model
  int dim = 128;
  int heads = 4;
  int layers = 4;
  int max_len = 1024;
  // optimizer / schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double lr0_pretrain = 0.0005;
  double lr0_finetune = 0.0001;
  int64_t decay_steps = 100000;
  // run
  int64_t steps = 5000;
  int batch_size = 8;
  int validate_every = 500;
  // sampling
  double temperature = 1.0;
  int top_k = 20;
  int max_tokens = 1024;

  void set(const std::string& key, const std::string& value) {
    auto as_int = [&] { return std::stoll(value); };
    auto as_double = [&] { return std::stod(value); };
    if (key == "dim") dim = static_cast<int>(as_int());
    else if (key == "heads") heads = static_cast<int>(as_int());
    else if (key == "layers") layers = static_cast<int>(as_int());
    else if (key == "max_len") max_len = static_cast<int>(as_int());
    else if (key == "beta1") beta1 = as_double();
    else if (key == "beta2") beta2 = as_double();
    else if (key == "weight_decay") weight_decay = as_double();
    else if (key == "lr0_pretrain") lr0_pretrain = as_double();
    else if (key == "lr0_finetune") lr0_finetune = as_double();
    else if (key == "decay_steps") decay_steps = as_int();
    else if (key == "steps") steps = as_int();
    else if (key == "batch_size") batch_size = static_cast<int>(as_int());
    else if (key == "validate_every") validate_every = static_cast<int>(as_int());
    else if (key == "temperature") temperature = as_double();
    else if (key == "top_k") top_k = static_cast<int>(as_int());
    else if (key == "max_tokens") max_tokens = static_cast<int>(as_int());
    else throw std::runtime_error("unknown config key: " + key);
  }

  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) continue;
      auto end = line.find_last_not_of(" \t\r");
      line = line.substr(begin, end - begin + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected key=value, got: " + line);
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      try {
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      } catch (const std::invalid_argument&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad value");
      }
    }
  }

  std::string dump() const {
    std::ostringstream out;
    out << "dim = " << dim << "\n";
    out << "heads = " << heads << "\n";
    out << "layers = " << layers << "\n";
    out << "max_len = " << max_len << "\n";
    out << "beta1 = " << beta1 << "\n";
    out << "beta2 = " << beta2 << "\n";
    out << "weight_decay = " << weight_decay << "\n";
    out << "lr0_pretrain = " << lr0_pretrain << "\n";
    out << "lr0_finetune = " << lr0_finetune << "\n";
    out << "decay_steps = " << decay_steps << "\n";
    out << "steps = " << steps << "\n";
    out << "batch_size = " << batch_size << "\n";
    out << "validate_every = " << validate_every << "\n";
    out << "temperature = " << temperature << "\n";
    out << "top_k = " << top_k << "\n";
    out << "max_tokens = " << max_tokens << "\n";
    return out.str();
  }
};
