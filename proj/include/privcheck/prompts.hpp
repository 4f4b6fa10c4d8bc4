#ifndef PRIVCHECK_PROMPTS_HPP
#define PRIVCHECK_PROMPTS_HPP

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

// Prompt templates. The reply parsers depend on the answer formats requested here.
// Placeholders are written {name}; {regulation} names the governing law.

namespace privcheck::prompts {

inline std::string fill(std::string_view tmpl, std::initializer_list<std::pair<std::string_view, std::string_view>> vars) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                auto name = tmpl.substr(i + 1, close - i - 1);
                bool replaced = false;
                for (const auto& [k, v] : vars) {
                    if (k == name) {
                        out += v;
                        replaced = true;
                        break;
                    }
                }
                if (replaced) {
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

inline constexpr std::string_view kThreeOptions =
    "Determine the relationship between the provided event and {regulation} regulations. You have three options for your conclusion:\n"
    "(A) The event is prohibited by {regulation}.\n"
    "(B) The event is permitted by {regulation}.\n"
    "(C) The event is not related to {regulation}.\n";

inline constexpr std::string_view kDirect =
    "{options}\n"
    "Event:\n"
    "{event}\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related ]\n";

inline constexpr std::string_view kCotAuto =
    "{options}\n"
    "Event:\n"
    "{event}\n"
    "\n"
    "Let's approach this step by step:\n"
    "\n"
    "Planning: Outline the steps (no more than 6) necessary to analyze the relationship of the event with {regulation} standards.\n"
    "Execution: Implement these steps to gather information and assess the specific aspects of the event.\n"
    "Decision Making: Based on the information collected and analyzed, determine if there was a {regulation} violation.\n"
    "Output Format:\n"
    "\n"
    "Plans: [List the steps planned to evaluate the event:]\n"
    "plan 1 - ...\n"
    "plan 2 - ...\n"
    "....\n"
    "plan N - ...\n"
    "\n"
    "Execution: [Document the outcomes from executing your plans:]\n"
    "plan 1 - ....\n"
    "plan 2 - ....\n"
    "....\n"
    "plan N - ...\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related ]\n";

inline constexpr std::string_view kCotManual =
    "{options}\n"
    "Event:\n"
    "{event}\n"
    "\n"
    "Let's approach this step by step:\n"
    "\n"
    "1. Identify Relevant {regulation} Regulations: Start by researching and compiling the {regulation} regulations that could be relevant to the event, particularly focusing on privacy, security, and breach notification rules.\n"
    "2. Examine the Nature of Information: Determine if the event involves any Protected Health Information (PHI), such as names, medical records, or other personal identifiers.\n"
    "3. Evaluate {regulation} Applicability: Assess whether the event actually falls under the jurisdiction of {regulation} based on the nature of the entity involved and the type of information handled.\n"
    "4. Assess Authorization and Consent: If {regulation} is applicable, verify if the recipient of the information was authorized and check for valid patient consent or another legal basis for sharing PHI.\n"
    "5. Evaluate Security Measures: If applicable, review the security measures used during the information transmission to ensure they comply with {regulation}'s security protocols.\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Execution: [Document the outcomes from executing your plans:]\n"
    "plan 1 - ....\n"
    "plan 2 - ....\n"
    "....\n"
    "plan 5 - ....\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related ]\n";

inline constexpr std::string_view kAgentIds =
    "Read the event described below and generate the applicable {regulation} regulations (no more than {generated_num}). This regulation will assist in determining if the event violates {regulation} security principles in a downstream task.\n"
    "\n"
    "Event: {event}\n"
    "\n"
    "Let's complete it step by step:\n"
    "1. Review the Event Details: Understand the specifics of the event, including the type of information sent, the method of transmission, and the parties involved.\n"
    "2. Identify Key {regulation} Concerns: Based on the event, identify potential concerns related to privacy, security, and breach notifications.\n"
    "3. Retrieve Relevant Regulations: Consult the {regulation} regulatory text to find sections specifically addressing the identified concerns. Consider feedback to avoid repeating previously rejected regulations.\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Execution: [Document the outcomes from executing the steps:]\n"
    "1. - ...\n"
    "2. - ...\n"
    "...\n"
    "4. - ...\n"
    "\n"
    "Generated Related {regulation} Regulations(e.g. re\"[0-9]+\\.[0-9]+(\\([0-9A-Za-zivx]+\\))*\" - xxxx):\n"
    "1. Section Number - Section Content\n"
    "...\n"
    "N. Section Number - Section Content\n"
    "\n"
    "Output:\n";

inline constexpr std::string_view kLawFilter =
    "Given a regulation and an information sending or requesting event, identify if the given regulation is relevant to the event. The process involves the following steps:\n"
    "\n"
    "1. **Understand the Event**:\n"
    "   - Extract key details from the description of the event, such as the type of information being exchanged, the parties involved, and the context or domain (e.g., healthcare, finance, education).\n"
    "\n"
    "2. **Analyze The Regulation**:\n"
    "   - For given regulation, determine its scope and main focus by reading the summary or key sections. Identify the primary subject matter, applicable contexts, or targeted stakeholders.\n"
    "\n"
    "3. **Relevance Matching**:\n"
    "   - Compare the key details of the event with the main focus of the regulation. Consider:\n"
    "     - Does the regulation explicitly address scenarios similar to the event?\n"
    "     - Is the regulation intended for the context or domain of the event?\n"
    "     - Are the parties involved in the event the type of entities the regulation aims to govern?\n"
    "\n"
    "4. **Filtering Decision**:\n"
    "   - If a regulation's focus aligns well with the event\xE2\x80\x99s details, please answer yes.\n"
    "   - If there is little to no alignment, such as different contexts, unrelated subjects, or inappropriate scopes, please answer no.\n"
    "\n"
    "Event: {event}\n"
    "\n"
    "{regulation} Regulation:\n"
    "{candidates}\n"
    "\n"
    "Note:\n"
    "It is possible that the event may be completely unrelated to the {regulation} regulations provided. In such cases, just answer NONE.\n"
    "\n"
    "Question:\n"
    "Is the given {regulation} Regulation relevant with the given event?\n"
    "\n"
    "Output Format:\n"
    "First answer yes or no, then explain the reason based on the given steps.\n";

inline constexpr std::string_view kIdDecision =
    "{options}\n"
    "I will offer you some retrieved {regulation} regulations for reference(Not 100% correct.) Consider the specifics of the event, offered sections of {regulation} regulations.\n"
    "\n"
    "Event:\n"
    "{event}\n"
    "\n"
    "{regulation} Regulations Reference:\n"
    "{reference_regulations}\n"
    "\n"
    "Let's complete it step by step:\n"
    "1. Understand the Event: Read the description of the event carefully to know exactly what happened.\n"
    "2. Look Up {regulation} Rules: Get the {regulation} regulations that are provided and find the parts that might relate to the event.\n"
    "3. Check for Key Points: Focus on important details of the event like the kind of information involved, who is handling it, and how it's being shared or used.\n"
    "4. Compare the Event with the Rules: See how the details of the event stack up against the {regulation} rules to find any matches or issues.\n"
    "\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Execution: [Document the outcomes from executing the steps:]\n"
    "1. - ...\n"
    "2. - ...\n"
    "...\n"
    "4. - ...\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related ]\n";

inline constexpr std::string_view kContentDecision =
    "Assess the relationship between the provided event and {regulation} regulations, and select one of the following conclusions:\n"
    "\n"
    "(A) The event is prohibited by {regulation}.\n"
    "(B) The event is permitted by {regulation}.\n"
    "(C) The event is not related to {regulation}.\n"
    "\n"
    "You will be given some sections of {regulation} regulations for reference (Note: these references may not be 100% accurate). Your task is to consider the specifics of the event in light of these sections. Remember that the provided references are not exhaustive, and the presence of a regulation does not automatically imply relevance or violation.\n"
    "\n"
    "Event:\n"
    "{event}\n"
    "\n"
    "{regulation} Regulations Reference:\n"
    "{reference_regulations}\n"
    "\n"
    "Let's complete it step by step:\n"
    "1. Analyze the specific details of the event by identifying who is involved (sender and recipient), what information is being sent or requested, and for what purpose.\n"
    "2. Compare key elements of the event with {regulation} rules, identifying if they involve the use, disclosure, or protection of Protected Health Information (PHI) as defined by {regulation}.\n"
    "3. Evaluate the provided {regulation} regulation excerpts to see if they directly relate to the event.\n"
    "4. Consider if there are other {regulation} rules not mentioned in the excerpts that might apply.\n"
    "5. Conclude based on the comprehensive analysis whether the event is in compliance, in violation, or unrelated to {regulation}.\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Execution: [Document the outcomes from executing each step]:\n"
    "1. - ...\n"
    "2. - ...\n"
    "...\n"
    "5. - ...\n"
    "\n"
    "\n"
    "Choice: [A. Prohibited | B. Permitted | C. Not related]\n";

inline constexpr std::string_view kExplanation =
    "I will provide you with an event concerning the delivery of information. Your task is to generate content related to this event by applying your knowledge of {regulation} regulations.\n"
    "\n"
    "To ensure the content is relevant and accurate, follow these steps:\n"
    "\n"
    "1. Understand the Event: Clearly define and understand the specifics of the event. Identify the key players involved, the type of information being handled, and the context in which it is being delivered.\n"
    "2. Apply {regulation} Knowledge: Utilize your understanding of {regulation} regulations, focusing on privacy, security, and the minimum necessary information principles. Ensure that your content addresses these aspects in the context of the event.\n"
    "\n"
    "Event Details:\n"
    "{event}\n"
    "\n"
    "Output Format:\n"
    "\n"
    "Execution:\n"
    "\n"
    "1. Identify the key players, type of information, and context.\n"
    "2. Apply relevant {regulation} principles to the event.\n"
    "\n"
    "Generated {regulation} Content:\n"
    "1. {regulation} Privacy Rule: ...\n"
    "2. {regulation} Security Rule: ...\n"
    "3. Minimum Necessary Standard:...\n"
    "\n"
    "References:\n"
    "List the specific {regulation} regulations you consulted to generate the content.\n";

inline constexpr std::string_view kQ1 =
    "Q1. (\"Prohibit\", \"Permit\" or \"General Definition\") Ascertain whether the regulation {regulation_id} pertains to scenes that are:\n"
    "A. Prohibit by law\n"
    "B. Permit by law\n"
    "C. General Definition\n";

inline constexpr std::string_view kQ2 =
    "Q2. (Identify the stakeholders related to {target}) Identify the stakeholders related to the {target}. Your response must include the following seven characteristics about the flow of private information: [Sender, Sender Role, Recipient, Recipient Role, Subject, Subject Role, Information Type, Consent Form, Purpose]. Answer 'None' if no information about characteristics is present.\n"
    "\n"
    "The \"Sender,\" \"Recipient,\" and \"Subject\" fields indicate the sender, recipient, and the data subject during information transmission.\n"
    "The \"Sender Role\", \"Recipient Role\" and \"Subject Role\" fields indicate the role of the sender, recipient and subject (e.g., doctor, patient).\n"
    "The \"Information Type\" field defines what kind of information would be passed, such as name or location.\n"
    "The \"Consent Form\" field indicates whether the sender has obtained consent from the subject to send the message. If consent is required, you should answer \"Consent\" for a flexible requirement or \"Authorization\" for a formal and mandatory process required by the context. If consent is not related to the context, you should answer \"None.\"\n"
    "The \"Purpose\" field indicates the purpose of the mentioned information transmission, such as treatment, payment, or health care operations.\n";

inline constexpr std::string_view kQ3Q4 =
    "Q3: Are the Sender and Subject the same person?\n"
    "A. Yes\n"
    "B. No\n"
    "C. Not Sure\n"
    "\n"
    "Q4: Is Recipient and Subject the same person?\n"
    "A. Yes\n"
    "B. No\n"
    "C. Not Sure\n";

inline constexpr std::string_view kQ5 =
    "Q5. (Identify the relation between {regulation_id} other sub-parts referred to in the context) Identify the relation between {regulation_id} and referred {reference_list}. For each reference in {reference_list}, according to the context given, determine if the reference is an exception of {regulation_id} or support the argument of {regulation_id}. Answer with \"Exception\" or \"Support\" for each reference.\n";

inline std::string with_options(std::string_view tmpl, std::string_view event, std::string_view regulation) {
    const auto options = fill(kThreeOptions, {{"regulation", regulation}});
    return fill(tmpl, {{"options", options}, {"event", event}, {"regulation", regulation}});
}

inline std::string direct(std::string_view event, std::string_view regulation = "HIPAA") {
    return with_options(kDirect, event, regulation);
}

inline std::string cot_auto(std::string_view event, std::string_view regulation = "HIPAA") {
    return with_options(kCotAuto, event, regulation);
}

inline std::string cot_manual(std::string_view event, std::string_view regulation = "HIPAA") {
    return with_options(kCotManual, event, regulation);
}

inline std::string agent_ids(std::string_view event, std::size_t generated_num, std::string_view regulation = "HIPAA") {
    const auto n = std::to_string(generated_num);
    return fill(kAgentIds, {{"event", event}, {"generated_num", n}, {"regulation", regulation}});
}

inline std::string law_filter(std::string_view event, std::string_view candidates, std::string_view regulation = "HIPAA") {
    return fill(kLawFilter, {{"event", event}, {"candidates", candidates}, {"regulation", regulation}});
}

inline std::string id_decision(std::string_view event, std::string_view references, std::string_view regulation = "HIPAA") {
    const auto options = fill(kThreeOptions, {{"regulation", regulation}});
    return fill(kIdDecision, {{"options", options}, {"event", event}, {"reference_regulations", references}, {"regulation", regulation}});
}

inline std::string content_decision(std::string_view event, std::string_view references, std::string_view regulation = "HIPAA") {
    return fill(kContentDecision, {{"event", event}, {"reference_regulations", references}, {"regulation", regulation}});
}

inline std::string explanation(std::string_view event, std::string_view regulation = "HIPAA") {
    return fill(kExplanation, {{"event", event}, {"regulation", regulation}});
}

/// Full questionnaire for one regulation leaf (Q1-Q5).
inline std::string ci_extraction(std::string_view regulation_id, std::string_view content, std::string_view reference_list,
                                 std::string_view regulation = "HIPAA") {
    std::string out = fill(
        "As a legal expert specializing in the {regulation} Privacy Rule, your task is to read a specific paragraph of the regulation {regulation_id}:\n"
        "{content}\n"
        "\n"
        "Now complete the following questions one by one:\n"
        "\n",
        {{"regulation", regulation}, {"regulation_id", regulation_id}, {"content", content}});
    const auto target = "regulation " + std::string(regulation_id);
    out += fill(kQ1, {{"regulation_id", regulation_id}});
    out += "\n";
    out += fill(kQ2, {{"target", target}});
    out += "\n";
    out += kQ3Q4;
    out += "\n";
    out += fill(kQ5, {{"regulation_id", regulation_id}, {"reference_list", reference_list}});
    return out;
}

/// Q2-Q4 subset applied to a free-text event.
inline std::string event_extraction(std::string_view event, std::string_view regulation = "HIPAA") {
    std::string out = fill(
        "As a legal expert specializing in the {regulation} Privacy Rule, your task is to read the following event:\n"
        "{event}\n"
        "\n"
        "Now complete the following questions one by one:\n"
        "\n",
        {{"regulation", regulation}, {"event", event}});
    out += fill(kQ2, {{"target", "event"}});
    out += "\n";
    out += kQ3Q4;
    return out;
}

inline constexpr std::string_view kNoReferences = "No relevant regulations found.";

}  // namespace privcheck::prompts

#endif
