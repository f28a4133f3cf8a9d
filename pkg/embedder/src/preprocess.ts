// Abstract preprocessing: lowercase, rule-based lemmatization (personal
// pronouns excluded), then punctuation and stopword removal. Token order is
// preserved; the output is a single space-joined string.

export const PERSONAL_PRONOUNS = new Set([
  "i", "me", "you", "he", "him", "she", "her", "it", "we", "us", "they", "them",
  "myself", "yourself", "himself", "herself", "itself", "ourselves", "themselves",
]);

export const STOPWORDS = new Set([
  "a", "an", "the", "and", "or", "but", "if", "then", "else", "when", "while",
  "of", "at", "by", "for", "with", "about", "against", "between", "into",
  "through", "during", "before", "after", "above", "below", "to", "from", "up",
  "down", "in", "out", "on", "off", "over", "under", "again", "further", "once",
  "here", "there", "where", "why", "how", "all", "any", "both", "each", "few",
  "more", "most", "other", "some", "such", "no", "nor", "not", "only", "own",
  "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "should",
  "now", "be", "have", "do", "that", "this", "these", "those", "which", "who",
  "whom", "what", "as", "because", "until", "their", "its", "his", "my", "your",
  "our", "her", "i", "me", "you", "he", "him", "she", "it", "we", "us", "they",
  "them",
]);

// irregular forms plus common e-dropping -ing/-ed words the suffix rules
// cannot recover
const LEMMA_EXCEPTIONS: Record<string, string> = {
  am: "be", is: "be", are: "be", was: "be", were: "be", been: "be", being: "be",
  has: "have", had: "have", having: "have",
  does: "do", did: "do", done: "do", doing: "do",
  goes: "go", went: "go", gone: "go",
  made: "make", making: "make",
  used: "use", using: "use", uses: "use",
  given: "give", gave: "give", giving: "give",
  taken: "take", took: "take", taking: "take",
  shown: "show", showed: "show",
  found: "find", finding: "find",
  obtained: "obtain", obtaining: "obtain",
  based: "base",
  proposed: "propose", proposing: "propose",
  studied: "study", studying: "study",
  measured: "measure", measuring: "measure",
  required: "require", requiring: "require",
  described: "describe", describing: "describe",
  observed: "observe", observing: "observe",
  computed: "compute", computing: "compute",
  analyzed: "analyze", analyzing: "analyze",
  compared: "compare", comparing: "compare",
  derived: "derive", deriving: "derive",
  better: "good", best: "good",
  worse: "bad", worst: "bad",
  men: "man", women: "woman", children: "child", data: "datum",
};

const VOWELS = new Set(["a", "e", "i", "o", "u"]);

function stripSuffix(word: string): string {
  // plural nouns / 3rd-person verbs
  if (word.endsWith("ies") && word.length > 4) return word.slice(0, -3) + "y";
  if (/(sses|xes|ches|shes|zes)$/.test(word)) return word.slice(0, -2);
  if (word.endsWith("s") && !word.endsWith("ss") && !word.endsWith("us")
      && !word.endsWith("is") && word.length > 3) {
    return word.slice(0, -1);
  }
  // past tense / gerund with doubled-consonant undo (stopped -> stop)
  for (const [suffix, restore] of [["ied", "y"], ["ed", ""], ["ing", ""]] as const) {
    if (word.endsWith(suffix) && word.length > suffix.length + 2) {
      let stem = word.slice(0, -suffix.length) + restore;
      const a = stem[stem.length - 1];
      const b = stem[stem.length - 2];
      if (stem.length > 2 && a === b && !VOWELS.has(a) && a !== "l" && a !== "s") {
        stem = stem.slice(0, -1);
      }
      return stem;
    }
  }
  return word;
}

export function lemmatize(word: string): string {
  const exception = LEMMA_EXCEPTIONS[word];
  if (exception) return exception;
  return stripSuffix(word);
}

export function preprocess(abstract: string): string {
  const out: string[] = [];
  for (const rawToken of abstract.split(/\s+/)) {
    const token = rawToken.replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, "");
    if (!token) continue; // pure punctuation
    const lower = token.toLowerCase();
    const lemma = PERSONAL_PRONOUNS.has(lower) ? lower : lemmatize(lower);
    if (STOPWORDS.has(lemma)) continue;
    out.push(lemma);
  }
  return out.join(" ");
}
