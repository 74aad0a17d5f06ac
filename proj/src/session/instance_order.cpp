#include "webxaii/session/instance_order.hpp"

#include <numeric>
#include <string>
#include <utility>

namespace webxaii {

std::vector<std::size_t> derive_instance_order(std::string_view protocol_id, std::string_view task_id,
                                               std::string_view user_login, std::size_t n, bool randomize) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!randomize || n < 2) return order;

    std::string key;
    key.reserve(protocol_id.size() + task_id.size() + user_login.size() + 2);
    key.append(protocol_id).append("|").append(task_id).append("|").append(user_login);
    SplitMix64 stream(fnv1a64(key));
    for (std::size_t j = n - 1; j > 0; --j) {
        auto k = static_cast<std::size_t>(stream.below(j + 1));
        std::swap(order[j], order[k]);
    }
    return order;
}

}  // namespace webxaii
