/**
 * Wire protocol: frame schema, validation, and structured composers.
 *
 * The console never sends free text to the server; every button and form
 * resolves to a fully-formed frame built here and validated client-side
 * before it reaches the socket.
 */
import { z } from "zod";

export const PERFORMATIVES = [
  "Query",
  "Inform",
  "Request",
  "Propose",
  "Accept",
  "Reject",
  "Subscribe",
  "Cancel",
  "Understood",
  "NotUnderstood",
] as const;

export type Performative = (typeof PERFORMATIVES)[number];

const contentSchema: z.ZodType<unknown> = z.union([
  z.string(),
  z.record(z.string(), z.unknown()),
]);

export const frameSchema = z
  .object({
    Performative: z.enum(PERFORMATIVES),
    Sender: z.string().min(1),
    Receiver: z.string().min(1),
    "In-reply-to": z.string(),
    Content: contentSchema,
    Protocol: z.string(),
    Ontology: z.string(),
    "Message-ID": z.string().min(1),
    "Conversation-ID": z.string().min(1),
  })
  .strict();

export type Frame = z.infer<typeof frameSchema>;

/** Wire field order is normative; serialise through this, not JSON.stringify
 * on an arbitrary object. */
export const WIRE_FIELDS = [
  "Performative",
  "Sender",
  "Receiver",
  "In-reply-to",
  "Content",
  "Protocol",
  "Ontology",
  "Message-ID",
  "Conversation-ID",
] as const;

export function encodeFrame(frame: Frame): string {
  frameSchema.parse(frame);
  const ordered: Record<string, unknown> = {};
  for (const field of WIRE_FIELDS) ordered[field] = frame[field];
  return JSON.stringify(ordered);
}

export function decodeFrame(text: string): Frame {
  return frameSchema.parse(JSON.parse(text));
}

/** Work-agreement document, as carried inside Propose/Accept content. */
export const waDocSchema = z.object({
  wa_id: z.string().min(1),
  kind: z.enum(["obligation", "prohibition"]),
  debtor: z.string(),
  creditor: z.string(),
  antecedent: z.record(z.string(), z.unknown()),
  consequent: z.record(z.string(), z.unknown()),
  deadline_ticks: z.number().int().positive().nullable(),
});

export type WaDoc = z.infer<typeof waDocSchema>;

export class FrameComposer {
  private counter = 0;

  constructor(
    private readonly sender: string,
    private readonly ontology: string,
    private readonly idPrefix = "ui",
  ) {}

  private nextId(): string {
    this.counter += 1;
    return `${this.idPrefix}-msg${this.counter}`;
  }

  private base(
    performative: Performative,
    receiver: string,
    content: Frame["Content"],
    conversationId: string,
    inReplyTo = "",
  ): Frame {
    return frameSchema.parse({
      Performative: performative,
      Sender: this.sender,
      Receiver: receiver,
      "In-reply-to": inReplyTo,
      Content: content,
      Protocol: "",
      Ontology: this.ontology,
      "Message-ID": this.nextId(),
      "Conversation-ID": conversationId,
    });
  }

  /** The "show me the vehicles" button. */
  queryVehicles(receiver: string, conversationId: string): Frame {
    return this.base("Query", receiver, "$.vehicles.*", conversationId);
  }

  query(receiver: string, path: string, conversationId: string): Frame {
    if (!path.startsWith("$")) throw new Error(`query path must start with $: ${path}`);
    return this.base("Query", receiver, path, conversationId);
  }

  request(
    receiver: string,
    action: Record<string, unknown> & { action: string },
    conversationId: string,
  ): Frame {
    return this.base("Request", receiver, action, conversationId);
  }

  proposeWa(receiver: string, wa: WaDoc, conversationId: string): Frame {
    return this.base("Propose", receiver, waDocSchema.parse(wa), conversationId);
  }

  /** Accept/Reject buttons on an incoming Propose. */
  accept(proposal: Frame, ref: string): Frame {
    return this.base(
      "Accept",
      proposal.Sender,
      { ref },
      proposal["Conversation-ID"],
      proposal["Message-ID"],
    );
  }

  reject(proposal: Frame, ref: string, reason: string): Frame {
    return this.base(
      "Reject",
      proposal.Sender,
      { ref, reason },
      proposal["Conversation-ID"],
      proposal["Message-ID"],
    );
  }

  cancelWa(receiver: string, waId: string, conversationId: string): Frame {
    return this.base("Cancel", receiver, { ref: waId }, conversationId);
  }

  subscribe(receiver: string, concept: string, conversationId: string): Frame {
    return this.base("Subscribe", receiver, `$.${concept}`, conversationId);
  }
}
