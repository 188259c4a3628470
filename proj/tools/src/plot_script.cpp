#include <sstream>

#include "afrelay/errors.hpp"
#include "afrelay_tools/commands.hpp"

namespace afr::tools {

namespace {

constexpr const char* kPrelude = R"py(import csv
import math
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else CSV_PATH
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))


def num(row, key):
    v = float(row[key])
    return v if math.isfinite(v) else None


def curves(rows, keys, x, y):
    out = {}
    for r in rows:
        v = num(r, y)
        if v is None:
            continue
        label = " ".join(r[k] for k in keys)
        out.setdefault(label, ([], []))
        out[label][0].append(float(r[x]))
        out[label][1].append(v)
    return out

)py";

constexpr const char* kRate = R"py(
for label, (xs, ys) in curves(rows, ["series", "constellation", "mode", "detector"], "x", "rate_bits").items():
    plt.plot(xs, ys, label=label)
for label, (xs, ys) in curves(rows, ["series", "constellation"], "x", "mc_rate_bits").items():
    errs = [num(r, "mc_std_error_nats") / math.log(2) for r in rows
            if " ".join([r["series"], r["constellation"]]) == label and num(r, "mc_rate_bits") is not None]
    plt.errorbar(xs, ys, yerr=errs, fmt="o", label="MC " + label)
plt.xlabel("sweep value")
plt.ylabel("rate [bits / source antenna]")
)py";

constexpr const char* kDistance = R"py(
hops = [c[len("rate_k"):-len("_bits")] for c in rows[0] if c.startswith("rate_k") and c.endswith("_bits")]
xs = [float(r["distance"]) for r in rows]
for k in hops:
    plt.plot(xs, [num(r, "rate_k%s_bits" % k) for r in rows], label="K=%s" % k)
plt.plot(xs, [num(r, "best_rate_bits") for r in rows], "k--", label="envelope")
plt.xlabel("source-destination distance")
plt.ylabel("rate [bits / source antenna]")
)py";

constexpr const char* kBer = R"py(
for label, (xs, ys) in curves(rows, ["detector"], "x", "replica_ber").items():
    plt.semilogy(xs, ys, label=label + " (replica)")
for label, (xs, ys) in curves(rows, ["detector"], "x", "mc_ber").items():
    plt.semilogy(xs, ys, "o", label=label + " (MC)")
for col, style in (("up_ber", ":"), ("down_ber", "-.")):
    for label, (xs, ys) in curves(rows, ["detector"], "x", col).items():
        plt.semilogy(xs, ys, style, label=label + " " + col[:-4])
lb = curves(rows[: len({r["x"] for r in rows})], [], "x", "lower_bound")
for _, (xs, ys) in lb.items():
    plt.semilogy(xs, ys, "k--", label="lower bound")
plt.xlabel("SNR [dB]")
plt.ylabel("BER")
)py";

constexpr const char* kDecoupling = R"py(
for label, (xs, ys) in curves(rows, ["detector"], "x", "mse").items():
    errs = [3 * num(r, "mse_std_error") for r in rows if r["detector"] == label and num(r, "mse") is not None]
    plt.errorbar(xs, ys, yerr=errs, fmt="o", label=label + " empirical")
for label, (xs, ys) in curves(rows, ["detector"], "x", "pred_mse").items():
    plt.semilogy(xs, ys, label=label + " scalar channel")
plt.xlabel("SNR [dB]")
plt.ylabel("per-stream MSE")
)py";

constexpr const char* kEpilogue = R"py(plt.grid(True, which="both", alpha=0.3)
plt.legend(fontsize="small")
out = path.rsplit(".", 1)[0] + ".png"
plt.savefig(out, dpi=150, bbox_inches="tight")
print(out)
)py";

}  // namespace

std::string plot_script(const std::string& command, const std::string& csv_path)
{
    const char* body = nullptr;
    if (command == "rate")
        body = kRate;
    else if (command == "distance")
        body = kDistance;
    else if (command == "ber")
        body = kBer;
    else if (command == "decoupling")
        body = kDecoupling;
    else
        throw ConfigError("no plot script for command '" + command + "'");
    std::ostringstream ss;
    ss << "# Plots " << command << " output written by afrelay " << kToolVersion << ".\n";
    ss << "CSV_PATH = " << '"' << csv_path << '"' << "\n\n";
    ss << kPrelude << body << kEpilogue;
    return ss.str();
}

}  // namespace afr::tools
