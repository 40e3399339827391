#include "json_util.hpp"
#include "posdwell/analysis.hpp"
#include "posdwell/synthesis.hpp"

namespace posdwell {

using json = nlohmann::ordered_json;

namespace {

json poly_json(const Poly& p) {
  json a = json::array();
  for (double c : p.coeffs()) a.push_back(c);
  return a;
}

Poly poly_from(const json& j) { return Poly(j.get<std::vector<double>>()); }

}  // namespace

json handelman_to_json(const HandelmanRecord& r) {
  json h;
  h["label"] = r.label;
  h["interval"] = {r.cert.interval.a, r.cert.interval.b};
  h["order"] = r.cert.order;
  h["margin"] = r.margin;
  h["target"] = poly_json(r.target);
  json w = json::array();
  for (const auto& [ij, c] : r.cert.weights) w.push_back({ij.first, ij.second, c});
  h["weights"] = w;
  return h;
}

HandelmanRecord handelman_from_json(const json& h) {
  HandelmanRecord r;
  r.label = h.at("label").get<std::string>();
  r.cert.interval = {h.at("interval").at(0).get<double>(), h.at("interval").at(1).get<double>()};
  r.cert.order = h.at("order").get<int>();
  r.margin = h.at("margin").get<double>();
  r.target = poly_from(h.at("target"));
  for (const auto& w : h.at("weights"))
    r.cert.weights[{w.at(0).get<int>(), w.at(1).get<int>()}] = w.at(2).get<double>();
  return r;
}

std::string certificate_to_json(const Certificate& c) {
  json o;
  o["kind"] = to_string(c.kind);
  o["gamma"] = c.gamma;
  o["dwell"] = c.dwell.to_string();
  o["degree"] = c.degree;
  o["margin"] = c.margin;
  o["range_mode"] = c.range_mode == RangeMode::MuVariant ? "mu" : "direct";
  o["close_flow"] = c.close_flow;
  o["close_jump"] = c.close_jump;
  o["handelman_boost"] = c.handelman_boost;
  json z = json::array();
  for (const auto& mode : c.zeta) {
    json mj = json::array();
    for (const auto& p : mode) mj.push_back(poly_json(p));
    z.push_back(mj);
  }
  o["zeta"] = z;
  json mu = json::array();
  for (const auto& p : c.mu) mu.push_back(poly_json(p));
  o["mu"] = mu;
  json hs = json::array();
  for (const auto& r : c.handelman) hs.push_back(handelman_to_json(r));
  o["handelman"] = hs;
  return o.dump(2) + "\n";
}

Certificate certificate_from_json(const std::string& text) {
  json o;
  try {
    o = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("certificate: ") + e.what());
  }
  try {
    Certificate c;
    c.kind = certificate_kind_from_string(o.at("kind").get<std::string>());
    c.gamma = o.at("gamma").get<double>();
    c.dwell = DwellTimeSpec::parse(o.at("dwell").get<std::string>());
    c.degree = o.value("degree", 0);
    c.margin = o.at("margin").get<double>();
    c.range_mode = o.value("range_mode", std::string("direct")) == "mu" ? RangeMode::MuVariant
                                                                         : RangeMode::Direct;
    c.close_flow = o.value("close_flow", false);
    c.close_jump = o.value("close_jump", false);
    c.handelman_boost = o.value("handelman_boost", 0);
    for (const auto& mj : o.at("zeta")) {
      c.zeta.emplace_back();
      for (const auto& p : mj) c.zeta.back().push_back(poly_from(p));
    }
    if (o.contains("mu"))
      for (const auto& p : o.at("mu")) c.mu.push_back(poly_from(p));
    if (o.contains("handelman"))
      for (const auto& h : o.at("handelman")) c.handelman.push_back(handelman_from_json(h));
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("certificate: ") + e.what());
  }
}

}  // namespace posdwell

namespace posdwell {

std::string controller_to_json(const ControllerRealization& c) {
  using detail::polymatrix_to_json;
  json o;
  o["kind"] = to_string(c.kind);
  o["gamma"] = c.gamma;
  o["dwell"] = c.dwell.to_string();
  o["degree"] = c.degree;
  o["margin"] = c.margin;
  o["x_min"] = c.x_min;
  o["handelman_boost"] = c.handelman_boost;
  json X = json::array(), Uc = json::array();
  for (const auto& mode : c.X) {
    json mj = json::array();
    for (const auto& p : mode) mj.push_back(poly_json(p));
    X.push_back(mj);
  }
  for (const auto& u : c.Uc) Uc.push_back(polymatrix_to_json(u));
  o["X"] = X;
  o["Uc"] = Uc;
  o["Ud"] = polymatrix_to_json(c.Ud);
  o["M"] = c.M;
  json hs = json::array();
  for (const auto& r : c.handelman) hs.push_back(handelman_to_json(r));
  o["handelman"] = hs;
  return o.dump(2) + "\n";
}

ControllerRealization controller_from_json(const std::string& text) {
  json o;
  try {
    o = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("controller: ") + e.what());
  }
  try {
    ControllerRealization c;
    c.kind = controller_kind_from_string(o.at("kind").get<std::string>());
    c.gamma = o.at("gamma").get<double>();
    c.dwell = DwellTimeSpec::parse(o.at("dwell").get<std::string>());
    c.degree = o.value("degree", 0);
    c.margin = o.value("margin", 0.0);
    c.x_min = o.value("x_min", 0.0);
    c.handelman_boost = o.value("handelman_boost", 0);
    for (const auto& mj : o.at("X")) {
      c.X.emplace_back();
      for (const auto& p : mj) c.X.back().push_back(poly_from(p));
    }
    if (c.X.empty()) throw ParseError("controller: X is empty");
    const int n = static_cast<int>(c.X[0].size());
    const auto& uc = o.at("Uc");
    if (uc.size() != c.X.size()) throw ParseError("controller: Uc needs one matrix per mode");
    for (const auto& u : uc) {
      json wrap;
      wrap["Uc"] = u;
      c.Uc.push_back(detail::polymatrix_from_json(wrap, "Uc", static_cast<int>(u.size()), n));
    }
    const auto& ud = o.at("Ud");
    c.Ud = detail::polymatrix_from_json(o, "Ud", static_cast<int>(ud.size()), n);
    c.M = o.value("M", std::vector<double>{});
    if (o.contains("handelman"))
      for (const auto& h : o.at("handelman")) c.handelman.push_back(handelman_from_json(h));
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("controller: ") + e.what());
  }
}

void save_certificate(const Certificate& c, const std::string& path) {
  detail::write_text(path, certificate_to_json(c));
}

Certificate load_certificate(const std::string& path) {
  return certificate_from_json(detail::read_text(path));
}

void save_controller(const ControllerRealization& c, const std::string& path) {
  detail::write_text(path, controller_to_json(c));
}

ControllerRealization load_controller(const std::string& path) {
  return controller_from_json(detail::read_text(path));
}

}  // namespace posdwell
