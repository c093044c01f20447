#include "orgscada/harness/oracle.hpp"

#include <map>

namespace orgscada {

const std::vector<ProtocolStep>& critical_path(PathClass c) {
  using P = Party;
  static const std::map<PathClass, std::vector<ProtocolStep>> table = {
      {PathClass::Local,
       {{"RA searches and subscribes to the local DF", P::Requester, P::Requester},
        {"DF NOTIFY registered -> RA", P::Requester, P::Requester}}},
      {PathClass::SharedAlready,
       {{"RA searches and subscribes to the local DF", P::Requester, P::Requester},
        {"DF NOTIFY registered -> RA", P::Requester, P::Requester}}},
      {PathClass::ExtendOverlap,
       {{"RA subscribes to the local DF (miss)", P::Requester, P::Requester},
        {"RA TRJA -> LS-RA", P::Requester, P::Requester},
        {"LS-RA relays TRJA -> GS", P::Requester, P::Requester},
        {"GS share REQUEST -> owner GS", P::Requester, P::Owner},
        {"owner GS instructs CA", P::Owner, P::Owner},
        {"CA register REQUEST -> requester DF", P::Owner, P::Requester},
        {"DF NOTIFY registered -> RA", P::Requester, P::Requester}}},
      {PathClass::NewOverlap,
       {{"RA subscribes to the local DF (miss)", P::Requester, P::Requester},
        {"RA TRJA -> LS-RA", P::Requester, P::Requester},
        {"LS-RA relays TRJA -> GS", P::Requester, P::Requester},
        {"GS CFP -> every acquaintance GS", P::Requester, P::Responder},
        {"owner GS PROPOSE -> GS", P::Owner, P::Requester},
        {"GS ACCEPT_PROPOSAL -> owner GS", P::Requester, P::Owner},
        {"owner GS instructs CA", P::Owner, P::Owner},
        {"CA register REQUEST -> requester DF", P::Owner, P::Requester},
        {"DF NOTIFY registered -> RA", P::Requester, P::Requester}}},
  };
  return table.at(c);
}

int hop_count_oracle(PathClass c, int n_acquaintances) {
  (void)n_acquaintances;
  int hops = 0;
  for (const auto& step : critical_path(c)) {
    if (step.from != step.to) ++hops;
  }
  return hops;
}

}  // namespace orgscada
